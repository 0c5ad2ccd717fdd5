#pragma once

#include <bit>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "palmscat/grid.hpp"

namespace palmscat {

namespace fft_detail {

struct Tables {
    std::vector<int> bitrev;
    // Interleaved (re, im) twiddles e^{-2*pi*i*k/n} for k < n/2, and their
    // conjugates; kept as raw doubles so the butterflies stay in scalar
    // arithmetic (std::complex multiplication routes through the checked
    // C-complex helpers and is far slower).
    std::vector<double> twiddle_fwd;
    std::vector<double> twiddle_inv;
};

inline const Tables& tables_for(int n) {
    thread_local std::unordered_map<int, Tables> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;

    Tables t;
    t.bitrev.resize(n);
    const int bits = std::countr_zero(static_cast<unsigned>(n));
    for (int i = 0; i < n; ++i) {
        unsigned r = 0;
        for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
        t.bitrev[i] = static_cast<int>(r);
    }
    t.twiddle_fwd.resize(n);
    t.twiddle_inv.resize(n);
    for (int k = 0; k < n / 2; ++k) {
        const double a = -2.0 * std::numbers::pi * k / n;
        t.twiddle_fwd[2 * k] = std::cos(a);
        t.twiddle_fwd[2 * k + 1] = std::sin(a);
        t.twiddle_inv[2 * k] = std::cos(a);
        t.twiddle_inv[2 * k + 1] = -std::sin(a);
    }
    return cache.emplace(n, std::move(t)).first->second;
}

/// In-place iterative radix-2 pass over interleaved (re, im) doubles.
/// No normalization; callers scale inverse transforms themselves.
inline void transform_interleaved(double* a, int n, const Tables& t, const double* tw) {
    for (int i = 0; i < n; ++i) {
        const int j = t.bitrev[i];
        if (i < j) {
            std::swap(a[2 * i], a[2 * j]);
            std::swap(a[2 * i + 1], a[2 * j + 1]);
        }
    }
    for (int len = 2; len <= n; len <<= 1) {
        const int half = len / 2;
        const int step = n / len;
        for (int base = 0; base < n; base += len) {
            const int lo = 2 * base;
            const int hi = 2 * (base + half);
            for (int k = 0; k < half; ++k) {
                const double wr = tw[2 * k * step];
                const double wi = tw[2 * k * step + 1];
                const double xr = a[hi + 2 * k];
                const double xi = a[hi + 2 * k + 1];
                const double vr = xr * wr - xi * wi;
                const double vi = xr * wi + xi * wr;
                const double ur = a[lo + 2 * k];
                const double ui = a[lo + 2 * k + 1];
                a[lo + 2 * k] = ur + vr;
                a[lo + 2 * k + 1] = ui + vi;
                a[hi + 2 * k] = ur - vr;
                a[hi + 2 * k + 1] = ui - vi;
            }
        }
    }
}

inline void require_pow2(int n, const char* what) {
    if (n <= 0 || !std::has_single_bit(static_cast<unsigned>(n)))
        throw std::invalid_argument(std::string(what) + ": size must be a power of two");
}

inline void transform2d(CGrid& g, bool inverse) {
    require_pow2(g.rows(), "fft2");
    require_pow2(g.cols(), "fft2");
    const int rows = g.rows(), cols = g.cols();
    const Tables& row_tables = tables_for(cols);
    const Tables& col_tables = tables_for(rows);
    const double* row_tw = inverse ? row_tables.twiddle_inv.data() : row_tables.twiddle_fwd.data();
    const double* col_tw = inverse ? col_tables.twiddle_inv.data() : col_tables.twiddle_fwd.data();

    auto* raw = reinterpret_cast<double*>(g.data());
    for (int r = 0; r < rows; ++r)
        transform_interleaved(raw + 2 * static_cast<std::size_t>(r) * cols, cols, row_tables,
                              row_tw);

    // Column pass via transposes: keeps the inner transforms contiguous.
    thread_local CGrid scratch;
    if (scratch.rows() != cols || scratch.cols() != rows) scratch = CGrid(cols, rows);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) scratch(c, r) = g(r, c);
    auto* sraw = reinterpret_cast<double*>(scratch.data());
    for (int c = 0; c < cols; ++c)
        transform_interleaved(sraw + 2 * static_cast<std::size_t>(c) * rows, rows, col_tables,
                              col_tw);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) g(r, c) = scratch(c, r);

    if (inverse) {
        const double s = 1.0 / (static_cast<double>(rows) * cols);
        const std::size_t len = 2 * g.size();
        for (std::size_t i = 0; i < len; ++i) raw[i] *= s;
    }
}

}  // namespace fft_detail

inline CGrid fft2(CGrid g) {
    fft_detail::transform2d(g, false);
    return g;
}

inline CGrid fft2(const Grid& g) { return fft2(to_complex(g)); }

inline CGrid ifft2(CGrid g) {
    fft_detail::transform2d(g, true);
    return g;
}

/// Exact circular convolution: pointwise spectral product with `filter_hat`
/// followed by the inverse transform. `filter_hat` is a frequency-domain grid
/// of the same dimensions as the image.
inline CGrid circular_convolve(const CGrid& image, const CGrid& filter_hat) {
    if (!image.same_shape(filter_hat))
        throw std::invalid_argument("circular_convolve: dimension mismatch");
    CGrid spec = fft2(image);
    pointwise_multiply(spec, filter_hat, spec);
    return ifft2(std::move(spec));
}

inline CGrid circular_convolve(const Grid& image, const CGrid& filter_hat) {
    return circular_convolve(to_complex(image), filter_hat);
}

}  // namespace palmscat
