#pragma once

#include <stdexcept>
#include <vector>

#include "palmscat/filterbank.hpp"
#include "palmscat/grid.hpp"
#include "palmscat/scattering.hpp"

namespace palmscat {

/// Flat per-image feature vector. Layout: block index (row-major) major,
/// then canonical path order, then [mean, variance].
using FeatureVector = std::vector<double>;

struct FeatureSchema {
    int image_size = 128;
    int block_size = 32;
    int scales = 5;
    int orientations = 6;
    int layers = 2;

    int blocks_per_side() const { return image_size / block_size; }
    int block_count() const { return blocks_per_side() * blocks_per_side(); }
    int paths_per_block() const {
        return static_cast<int>(path_count(scales, orientations, layers));
    }
    int dim() const { return block_count() * 2 * paths_per_block(); }

    void validate() const {
        if (image_size <= 0 || block_size <= 0)
            throw std::invalid_argument("feature schema: sizes must be positive");
        if (image_size % block_size != 0)
            throw std::invalid_argument("feature schema: image size must be divisible by block size");
        if (layers < 0 || layers > scales)
            throw std::invalid_argument("feature schema: layers must lie in [0, scales]");
    }

    friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

/// Cuts an image into non-overlapping block x block tiles in row-major order.
/// Dimensions that do not divide evenly are rejected; there is no padding.
inline std::vector<Grid> split_blocks(const Grid& image, int block) {
    if (block <= 0) throw std::invalid_argument("split_blocks: block size must be positive");
    if (image.rows() % block != 0 || image.cols() % block != 0)
        throw std::invalid_argument("split_blocks: image dimensions must be divisible by block size");
    std::vector<Grid> tiles;
    tiles.reserve(static_cast<std::size_t>(image.rows() / block) * (image.cols() / block));
    for (int br = 0; br < image.rows(); br += block) {
        for (int bc = 0; bc < image.cols(); bc += block) {
            Grid tile(block, block);
            for (int r = 0; r < block; ++r)
                for (int c = 0; c < block; ++c) tile(r, c) = image(br + r, bc + c);
            tiles.push_back(std::move(tile));
        }
    }
    return tiles;
}

/// Per-map (spatial mean, population variance) in canonical map order;
/// output length is 2 * |maps|.
inline std::vector<double> map_stats(const ScatteringMaps& maps) {
    if (maps.maps.empty()) throw std::invalid_argument("map_stats: no maps");
    std::vector<double> stats;
    stats.reserve(2 * maps.maps.size());
    for (const PathMap& pm : maps.maps) {
        const Grid& img = pm.image;
        double mean = 0.0;
        for (double v : img) mean += v;
        mean /= static_cast<double>(img.size());
        double var = 0.0;
        for (double v : img) {
            const double d = v - mean;
            var += d * d;
        }
        var /= static_cast<double>(img.size());
        stats.push_back(mean);
        stats.push_back(var);
    }
    return stats;
}

/// Full per-image feature vector: map_stats of every block's scattering
/// maps, concatenated in row-major block order.
inline FeatureVector extract_features(const Grid& image, const FeatureSchema& schema,
                                      const FilterBank& bank) {
    schema.validate();
    if (image.rows() != schema.image_size || image.cols() != schema.image_size)
        throw std::invalid_argument("extract_features: image does not match schema size");
    if (bank.config.size != schema.block_size || bank.config.scales != schema.scales ||
        bank.config.orientations != schema.orientations)
        throw std::invalid_argument("extract_features: filter bank does not match schema");

    FeatureVector features;
    features.reserve(static_cast<std::size_t>(schema.dim()));
    for (const Grid& tile : split_blocks(image, schema.block_size)) {
        const auto stats = map_stats(transform_block(tile, bank, schema.layers));
        features.insert(features.end(), stats.begin(), stats.end());
    }
    return features;
}

}  // namespace palmscat
