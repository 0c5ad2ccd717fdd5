#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "palmscat/fft.hpp"
#include "palmscat/grid.hpp"

using namespace palmscat;

namespace {

Grid random_grid(int rows, int cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Grid g(rows, cols);
    for (auto& v : g) v = dist(rng);
    return g;
}

// O(n^4) spatial-domain circular convolution used as the independent oracle.
Grid spatial_circular_convolve(const Grid& image, const Grid& kernel) {
    Grid out(image.rows(), image.cols(), 0.0);
    for (int r = 0; r < image.rows(); ++r)
        for (int c = 0; c < image.cols(); ++c) {
            double acc = 0.0;
            for (int kr = 0; kr < kernel.rows(); ++kr)
                for (int kc = 0; kc < kernel.cols(); ++kc)
                    acc += image.wrapped(r - kr, c - kc) * kernel(kr, kc);
            out(r, c) = acc;
        }
    return out;
}

double max_abs_diff(const Grid& a, const Grid& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace

TEST_CASE("fft2/ifft2 round trip") {
    std::mt19937_64 rng(11);
    const Grid g = random_grid(16, 16, rng);
    const Grid back = real_part(ifft2(fft2(g)));
    REQUIRE(max_abs_diff(g, back) < 1e-12);
}

TEST_CASE("fft rejects non power-of-two sizes") {
    CGrid g(6, 6);
    REQUIRE_THROWS_AS(fft2(g), std::invalid_argument);
}

TEST_CASE("convolution with the identity filter returns the image") {
    std::mt19937_64 rng(12);
    const Grid img = random_grid(8, 8, rng);
    CGrid identity(8, 8, {1.0, 0.0});
    const Grid out = real_part(circular_convolve(img, identity));
    REQUIRE(max_abs_diff(img, out) < 1e-10);
}

TEST_CASE("delta image convolved with a filter recovers the filter") {
    std::mt19937_64 rng(13);
    const Grid kernel = random_grid(8, 8, rng);
    Grid delta(8, 8, 0.0);
    delta(0, 0) = 1.0;
    const Grid out = real_part(circular_convolve(delta, fft2(kernel)));
    REQUIRE(max_abs_diff(kernel, out) < 1e-12);
}

TEST_CASE("frequency-domain convolution matches the spatial oracle") {
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 20; ++trial) {
        const Grid img = random_grid(8, 8, rng);
        const Grid kernel = random_grid(8, 8, rng);
        const Grid expected = spatial_circular_convolve(img, kernel);
        const Grid actual = real_part(circular_convolve(img, fft2(kernel)));
        REQUIRE(max_abs_diff(expected, actual) < 1e-8);
    }
}

TEST_CASE("convolution rejects mismatched dimensions") {
    Grid img(8, 8, 0.0);
    CGrid filt(16, 16);
    REQUIRE_THROWS_AS(circular_convolve(img, filt), std::invalid_argument);
}

TEST_CASE("rectangular grids transform correctly") {
    std::mt19937_64 rng(15);
    const Grid img = random_grid(4, 16, rng);
    const Grid kernel = random_grid(4, 16, rng);
    const Grid expected = spatial_circular_convolve(img, kernel);
    const Grid actual = real_part(circular_convolve(img, fft2(kernel)));
    REQUIRE(max_abs_diff(expected, actual) < 1e-8);
}

TEST_CASE("Parseval identity holds") {
    std::mt19937_64 rng(16);
    const Grid g = random_grid(32, 32, rng);
    double spatial = 0.0;
    for (double v : g) spatial += v * v;
    const CGrid spec = fft2(g);
    double freq = 0.0;
    for (const auto& v : spec) freq += std::norm(v);
    freq /= static_cast<double>(g.size());
    REQUIRE(spatial == Catch::Approx(freq).epsilon(1e-12));
}
