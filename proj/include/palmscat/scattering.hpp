#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "palmscat/fft.hpp"
#include "palmscat/filterbank.hpp"
#include "palmscat/grid.hpp"

namespace palmscat {

/// One output map's address in the cascade: the ordered (scale, orientation)
/// pairs applied before the final averaging. The empty path is layer 0.
/// Scale indices are strictly increasing along the path (larger index =
/// coarser scale); the envelope after a wavelet modulus carries energy only
/// below that wavelet's band, so finer follow-up scales are omitted.
struct ScatteringPath {
    std::vector<int> scales;
    std::vector<int> orientations;

    int layer() const { return static_cast<int>(scales.size()); }

    friend bool operator==(const ScatteringPath& a, const ScatteringPath& b) {
        return a.scales == b.scales && a.orientations == b.orientations;
    }
};

/// Canonical ordering: layer-major, then lexicographic in (scales,
/// orientations).
inline bool canonical_path_less(const ScatteringPath& a, const ScatteringPath& b) {
    if (a.layer() != b.layer()) return a.layer() < b.layer();
    if (a.scales != b.scales) return a.scales < b.scales;
    return a.orientations < b.orientations;
}

struct PathMap {
    ScatteringPath path;
    Grid image;
};

/// Ordered collection of transformed images for one input block.
struct ScatteringMaps {
    std::vector<PathMap> maps;

    std::size_t size() const { return maps.size(); }
};

inline std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

/// Number of admissible paths for layers 0..m: sum_k p^k * C(J, k).
inline std::int64_t path_count(int scales, int orientations, int layers) {
    std::int64_t total = 0;
    std::int64_t pk = 1;
    for (int k = 0; k <= layers; ++k) {
        total += pk * binomial(scales, k);
        pk *= orientations;
    }
    return total;
}

/// Enumerates all admissible paths for layers 0..m in canonical order.
inline std::vector<ScatteringPath> enumerate_paths(int scales, int orientations, int layers) {
    if (scales < 1 || orientations < 1)
        throw std::invalid_argument("enumerate_paths: scales and orientations must be >= 1");
    if (layers < 0 || layers > scales)
        throw std::invalid_argument("enumerate_paths: layer count must lie in [0, scales]");

    std::vector<ScatteringPath> out;
    out.reserve(static_cast<std::size_t>(path_count(scales, orientations, layers)));
    out.push_back({});

    std::vector<int> scale_tuple, orient_tuple;
    auto emit_orientations = [&](auto&& self, std::size_t pos) -> void {
        if (pos == scale_tuple.size()) {
            out.push_back({scale_tuple, orient_tuple});
            return;
        }
        for (int l = 0; l < orientations; ++l) {
            orient_tuple.push_back(l);
            self(self, pos + 1);
            orient_tuple.pop_back();
        }
    };
    auto emit_scales = [&](auto&& self, int next_min, int remaining) -> void {
        if (remaining == 0) {
            emit_orientations(emit_orientations, 0);
            return;
        }
        for (int j = next_min; j <= scales - remaining; ++j) {
            scale_tuple.push_back(j);
            self(self, j + 1, remaining - 1);
            scale_tuple.pop_back();
        }
    };
    for (int k = 1; k <= layers; ++k) emit_scales(emit_scales, 0, k);
    return out;
}

namespace scattering_detail {

inline Grid lowpass_real(const CGrid& spec, const Grid& phi_hat) {
    CGrid g(spec.rows(), spec.cols());
    pointwise_multiply(spec, phi_hat, g);
    return real_part(ifft2(std::move(g)));
}

inline Grid clamp_nonnegative(Grid g) {
    for (auto& v : g)
        if (v < 0.0) v = 0.0;
    return g;
}

// Packs two real fields into one complex transform (a + i*b). Because the
// low-pass is real-valued in frequency, ifft2(F * phi_hat) then carries map_a
// in its real part and map_b in its imaginary part, and the individual
// spectra unpack through the Hermitian split. This halves the transform
// count of the cascade.
struct PackedPair {
    CGrid spectrum;  // fft2(a + i*b)

    PackedPair(const Grid& a, const Grid& b) : spectrum(a.rows(), a.cols()) {
        for (std::size_t i = 0; i < spectrum.size(); ++i)
            spectrum.data()[i] = {a.data()[i], b.data()[i]};
        fft_detail::transform2d(spectrum, false);
    }

    std::pair<Grid, Grid> lowpass_maps(const Grid& phi_hat) const {
        CGrid v(spectrum.rows(), spectrum.cols());
        pointwise_multiply(spectrum, phi_hat, v);
        v = ifft2(std::move(v));
        Grid map_a(v.rows(), v.cols());
        Grid map_b(v.rows(), v.cols());
        for (std::size_t i = 0; i < v.size(); ++i) {
            map_a.data()[i] = v.data()[i].real();
            map_b.data()[i] = v.data()[i].imag();
        }
        return {std::move(map_a), std::move(map_b)};
    }

    std::pair<CGrid, CGrid> unpack() const {
        const int n_rows = spectrum.rows(), n_cols = spectrum.cols();
        CGrid a(n_rows, n_cols), b(n_rows, n_cols);
        for (int r = 0; r < n_rows; ++r) {
            for (int c = 0; c < n_cols; ++c) {
                const auto f = spectrum(r, c);
                const auto h = spectrum((n_rows - r) % n_rows, (n_cols - c) % n_cols);
                a(r, c) = {0.5 * (f.real() + h.real()), 0.5 * (f.imag() - h.imag())};
                b(r, c) = {0.5 * (f.imag() + h.imag()), 0.5 * (h.real() - f.real())};
            }
        }
        return {std::move(a), std::move(b)};
    }
};

}  // namespace scattering_detail

/// Scattering transform of one block up to layer m: cascade of wavelet
/// convolution, complex modulus and low-pass averaging. All convolutions are
/// circular; maps keep the full block resolution. Output order is canonical.
inline ScatteringMaps transform_block(const Grid& block, const FilterBank& bank, int layers) {
    const int n = bank.config.size;
    if (block.rows() != n || block.cols() != n)
        throw std::invalid_argument("transform_block: block dimensions do not match the bank");
    if (layers < 0 || layers > bank.config.scales)
        throw std::invalid_argument("transform_block: layer count must lie in [0, scales]");

    const int J = bank.config.scales;
    const int p = bank.config.orientations;

    ScatteringMaps result;
    result.maps.reserve(static_cast<std::size_t>(path_count(J, p, layers)));

    const CGrid block_hat = fft2(block);
    result.maps.push_back({{}, scattering_detail::lowpass_real(block_hat, bank.phi_hat)});

    ScatteringPath path;
    auto emit = [&](int j, int l, Grid map) {
        path.scales.push_back(j);
        path.orientations.push_back(l);
        result.maps.push_back({path, scattering_detail::clamp_nonnegative(std::move(map))});
        path.scales.pop_back();
        path.orientations.pop_back();
    };
    auto envelope = [&](const CGrid& parent_hat, int j, int l) {
        CGrid band(n, n);
        pointwise_multiply(parent_hat, bank.psi_hat[j][l], band);
        return modulus(ifft2(std::move(band)));
    };
    auto descend = [&](auto&& self, const CGrid& parent_hat, int min_scale) -> void {
        const bool expand = path.layer() + 1 < layers;
        for (int j = min_scale; j < J; ++j) {
            int l = 0;
            for (; l + 1 < p; l += 2) {  // orientation pairs share transforms
                const Grid env_a = envelope(parent_hat, j, l);
                const Grid env_b = envelope(parent_hat, j, l + 1);
                const scattering_detail::PackedPair pair(env_a, env_b);
                auto [map_a, map_b] = pair.lowpass_maps(bank.phi_hat);
                emit(j, l, std::move(map_a));
                emit(j, l + 1, std::move(map_b));
                if (expand) {
                    auto [hat_a, hat_b] = pair.unpack();
                    path.scales.push_back(j);
                    path.orientations.push_back(l);
                    self(self, hat_a, j + 1);
                    path.orientations.back() = l + 1;
                    self(self, hat_b, j + 1);
                    path.scales.pop_back();
                    path.orientations.pop_back();
                }
            }
            if (l < p) {  // odd orientation count leaves one unpaired
                const CGrid env_hat = fft2(envelope(parent_hat, j, l));
                emit(j, l,
                     scattering_detail::lowpass_real(env_hat, bank.phi_hat));
                if (expand) {
                    path.scales.push_back(j);
                    path.orientations.push_back(l);
                    self(self, env_hat, j + 1);
                    path.scales.pop_back();
                    path.orientations.pop_back();
                }
            }
        }
    };
    if (layers > 0) descend(descend, block_hat, 0);

    std::sort(result.maps.begin(), result.maps.end(),
              [](const PathMap& a, const PathMap& b) {
                  return canonical_path_less(a.path, b.path);
              });
    return result;
}

}  // namespace palmscat
