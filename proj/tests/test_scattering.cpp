#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <vector>

#include "palmscat/filterbank.hpp"
#include "palmscat/scattering.hpp"

using namespace palmscat;

namespace {

Grid random_block(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Grid g(n, n);
    for (auto& v : g) v = dist(rng);
    return g;
}

// Brute-force path enumeration: every strictly increasing scale tuple of
// length k crossed with every orientation tuple, for k = 0..m.
std::vector<std::pair<std::vector<int>, std::vector<int>>> brute_force_paths(int J, int p,
                                                                             int m) {
    std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
    out.push_back({{}, {}});
    for (int k = 1; k <= m; ++k) {
        std::vector<int> scale_sel(k);
        auto scales_rec = [&](auto&& self, int start, int depth) -> void {
            if (depth == k) {
                std::vector<int> orient(k, 0);
                for (;;) {
                    out.push_back({scale_sel, orient});
                    int pos = k - 1;
                    while (pos >= 0 && ++orient[pos] == p) orient[pos--] = 0;
                    if (pos < 0) break;
                }
                return;
            }
            for (int j = start; j < J; ++j) {
                scale_sel[depth] = j;
                self(self, j + 1, depth + 1);
            }
        };
        scales_rec(scales_rec, 0, 0);
    }
    return out;
}

double spatial_mean(const Grid& g) {
    double s = 0.0;
    for (double v : g) s += v;
    return s / static_cast<double>(g.size());
}

double l2_norm_sq(const Grid& g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return s;
}

double maps_distance(const ScatteringMaps& a, const ScatteringMaps& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.maps.size(); ++i) {
        const Grid& ga = a.maps[i].image;
        const Grid& gb = b.maps[i].image;
        for (std::size_t k = 0; k < ga.size(); ++k) {
            const double d = ga.data()[k] - gb.data()[k];
            s += d * d;
        }
    }
    return std::sqrt(s);
}

std::vector<double> map_means(const ScatteringMaps& maps) {
    std::vector<double> out;
    out.reserve(maps.maps.size());
    for (const auto& pm : maps.maps) out.push_back(spatial_mean(pm.image));
    return out;
}

double vec_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("path counts match the closed form") {
    REQUIRE(enumerate_paths(5, 6, 2).size() == 391);
    REQUIRE(enumerate_paths(5, 6, 0).size() == 1);
    REQUIRE(enumerate_paths(3, 2, 3).size() == 27);  // 1 + 6 + 12 + 8
    REQUIRE_THROWS_AS(enumerate_paths(3, 2, 4), std::invalid_argument);
}

TEST_CASE("path enumeration agrees with brute force for the whole grid") {
    for (int J = 1; J <= 6; ++J) {
        for (int p = 1; p <= 8; ++p) {
            for (int m = 1; m <= J; ++m) {
                const auto paths = enumerate_paths(J, p, m);
                const auto brute = brute_force_paths(J, p, m);
                REQUIRE(paths.size() == brute.size());
                REQUIRE(paths.size() == static_cast<std::size_t>(path_count(J, p, m)));
                // Same path sets (brute force emits in the same canonical order).
                for (std::size_t i = 0; i < paths.size(); ++i) {
                    REQUIRE(paths[i].scales == brute[i].first);
                    REQUIRE(paths[i].orientations == brute[i].second);
                }
            }
        }
    }
}

TEST_CASE("paths are unique, admissible and canonically ordered") {
    const auto paths = enumerate_paths(5, 6, 2);
    std::set<std::pair<std::vector<int>, std::vector<int>>> seen;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const auto& p = paths[i];
        REQUIRE(p.scales.size() == p.orientations.size());
        for (std::size_t k = 1; k < p.scales.size(); ++k)
            REQUIRE(p.scales[k - 1] < p.scales[k]);
        for (int l : p.orientations) {
            REQUIRE(l >= 0);
            REQUIRE(l < 6);
        }
        REQUIRE(seen.insert({p.scales, p.orientations}).second);
        if (i > 0) REQUIRE(canonical_path_less(paths[i - 1], paths[i]));
    }
}

TEST_CASE("transform of a constant block concentrates in layer 0") {
    const FilterBank bank = build_filter_bank({.scales = 5, .orientations = 6, .size = 32});
    const double c = 0.7;
    const Grid block(32, 32, c);
    const ScatteringMaps maps = transform_block(block, bank, 2);
    REQUIRE(maps.size() == 391);
    for (const auto& pm : maps.maps) {
        if (pm.path.layer() == 0) {
            for (double v : pm.image) REQUIRE(v == Catch::Approx(c).margin(1e-9));
        } else {
            for (double v : pm.image) {
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1e-6 * c);
            }
        }
    }
}

TEST_CASE("a matched sinusoid maximizes its own layer-1 map mean") {
    const FilterBank bank = build_filter_bank({.scales = 5, .orientations = 6, .size = 32});
    // Peak bin of psi[2][0]: center frequency 3*pi/16 = bin 3 along x.
    const int j_star = 2, l_star = 0;
    Grid block(32, 32);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c)
            block(r, c) = std::cos(2.0 * std::numbers::pi * 3.0 * c / 32.0);

    const ScatteringMaps maps = transform_block(block, bank, 1);
    double best_mean = -1.0;
    std::vector<int> best_path;
    for (const auto& pm : maps.maps) {
        if (pm.path.layer() != 1) continue;
        const double mean = spatial_mean(pm.image);
        if (mean > best_mean) {
            best_mean = mean;
            best_path = {pm.path.scales[0], pm.path.orientations[0]};
        }
    }
    REQUIRE(best_path == std::vector<int>{j_star, l_star});
}

TEST_CASE("transform validates its inputs") {
    const FilterBank bank = build_filter_bank({.scales = 3, .orientations = 2, .size = 16});
    REQUIRE_THROWS_AS(transform_block(Grid(8, 8, 0.0), bank, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(transform_block(Grid(16, 16, 0.0), bank, 4), std::invalid_argument);
}

TEST_CASE("map count and order match the path enumeration") {
    const FilterBank bank = build_filter_bank({.scales = 4, .orientations = 3, .size = 16});
    std::mt19937_64 rng(21);
    const Grid block = random_block(16, rng);
    const ScatteringMaps maps = transform_block(block, bank, 2);
    const auto paths = enumerate_paths(4, 3, 2);
    REQUIRE(maps.size() == paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) REQUIRE(maps.maps[i].path == paths[i]);
}

TEST_CASE("cascade is non-expansive between random blocks") {
    const FilterBank bank = build_filter_bank({.scales = 4, .orientations = 4, .size = 16});
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 10; ++trial) {
        const Grid f = random_block(16, rng);
        const Grid g = random_block(16, rng);
        const ScatteringMaps sf = transform_block(f, bank, 2);
        const ScatteringMaps sg = transform_block(g, bank, 2);
        Grid diff(16, 16);
        for (std::size_t i = 0; i < f.size(); ++i)
            diff.data()[i] = f.data()[i] - g.data()[i];
        REQUIRE(maps_distance(sf, sg) <= std::sqrt(l2_norm_sq(diff)) * (1.0 + 1e-6));
    }
}

TEST_CASE("scattering energy never exceeds the input energy") {
    const FilterBank bank = build_filter_bank({.scales = 3, .orientations = 4, .size = 16});
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        const Grid f = random_block(16, rng);
        const ScatteringMaps maps = transform_block(f, bank, 3);  // m = J
        double total = 0.0;
        for (const auto& pm : maps.maps) total += l2_norm_sq(pm.image);
        REQUIRE(total <= l2_norm_sq(f) * (1.0 + 1e-6));
    }
}

TEST_CASE("shifted textures stay closer than independent textures") {
    const FilterBank bank = build_filter_bank({.scales = 5, .orientations = 6, .size = 32});
    std::mt19937_64 rng(24);
    std::uniform_int_distribution<int> shift_dist(-4, 4);
    for (int trial = 0; trial < 20; ++trial) {
        const Grid f = random_block(32, rng);
        const Grid other = random_block(32, rng);
        const Grid shifted = circular_shift(f, shift_dist(rng), shift_dist(rng));

        const auto base = map_means(transform_block(f, bank, 2));
        const auto near = map_means(transform_block(shifted, bank, 2));
        const auto far = map_means(transform_block(other, bank, 2));
        REQUIRE(vec_distance(base, near) < vec_distance(base, far));
    }
}

TEST_CASE("transform is deterministic") {
    const FilterBank bank = build_filter_bank({.scales = 3, .orientations = 3, .size = 16});
    std::mt19937_64 rng(25);
    const Grid f = random_block(16, rng);
    const ScatteringMaps a = transform_block(f, bank, 2);
    const ScatteringMaps b = transform_block(f, bank, 2);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a.maps[i].image == b.maps[i].image);
}
