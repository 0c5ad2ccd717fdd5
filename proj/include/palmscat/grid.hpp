#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace palmscat {

/// Dense row-major 2-D array. Row index = vertical (y) axis, column index =
/// horizontal (x) axis.
template <typename T>
class Array2d {
public:
    Array2d() = default;

    Array2d(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols),
          data_(checked_extent(rows) * checked_extent(cols), fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int r, int c) {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }
    const T& operator()(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    /// Access with circular (periodic) index wrapping.
    const T& wrapped(int r, int c) const {
        r %= rows_; if (r < 0) r += rows_;
        c %= cols_; if (c < 0) c += cols_;
        return (*this)(r, c);
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    bool same_shape(const Array2d& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Array2d& a, const Array2d& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    static std::size_t checked_extent(int n) {
        if (n <= 0) throw std::invalid_argument("Array2d: extents must be positive");
        return static_cast<std::size_t>(n);
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using Grid = Array2d<double>;
using CGrid = Array2d<std::complex<double>>;

inline CGrid to_complex(const Grid& g) {
    CGrid out(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) out.data()[i] = g.data()[i];
    return out;
}

inline Grid real_part(const CGrid& g) {
    Grid out(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) out.data()[i] = g.data()[i].real();
    return out;
}

inline Grid modulus(const CGrid& g) {
    Grid out(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double re = g.data()[i].real();
        const double im = g.data()[i].imag();
        out.data()[i] = std::sqrt(re * re + im * im);
    }
    return out;
}

/// dst = a * b elementwise, written in scalar arithmetic (std::complex
/// multiplication goes through the checked C-complex helpers).
inline void pointwise_multiply(const CGrid& a, const CGrid& b, CGrid& dst) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ar = a.data()[i].real(), ai = a.data()[i].imag();
        const double br = b.data()[i].real(), bi = b.data()[i].imag();
        dst.data()[i] = {ar * br - ai * bi, ar * bi + ai * br};
    }
}

/// dst = a * w elementwise for a real-valued filter w.
inline void pointwise_multiply(const CGrid& a, const Grid& w, CGrid& dst) {
    for (std::size_t i = 0; i < a.size(); ++i)
        dst.data()[i] = {a.data()[i].real() * w.data()[i], a.data()[i].imag() * w.data()[i]};
}

/// Swap quadrants so that the (0,0) sample moves to the grid centre.
template <typename T>
Array2d<T> fftshift(const Array2d<T>& g) {
    Array2d<T> out(g.rows(), g.cols());
    const int hr = g.rows() / 2, hc = g.cols() / 2;
    for (int r = 0; r < g.rows(); ++r)
        for (int c = 0; c < g.cols(); ++c)
            out((r + hr) % g.rows(), (c + hc) % g.cols()) = g(r, c);
    return out;
}

/// Circularly shift a grid by (dr, dc); entry (r, c) moves to (r+dr, c+dc).
template <typename T>
Array2d<T> circular_shift(const Array2d<T>& g, int dr, int dc) {
    Array2d<T> out(g.rows(), g.cols());
    for (int r = 0; r < g.rows(); ++r)
        for (int c = 0; c < g.cols(); ++c)
            out(((r + dr) % g.rows() + g.rows()) % g.rows(),
                ((c + dc) % g.cols() + g.cols()) % g.cols()) = g(r, c);
    return out;
}

}  // namespace palmscat
