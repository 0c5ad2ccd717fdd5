#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "palmscat/grid.hpp"

namespace palmscat {

namespace pgm_detail {

// Skips whitespace and '#' comment lines between header tokens.
inline int next_header_int(std::istream& in, const std::string& path) {
    for (;;) {
        int ch = in.peek();
        if (ch == EOF) throw std::runtime_error("pgm: truncated header in " + path);
        if (std::isspace(ch)) { in.get(); continue; }
        if (ch == '#') { std::string line; std::getline(in, line); continue; }
        break;
    }
    int value = 0;
    if (!(in >> value)) throw std::runtime_error("pgm: malformed header in " + path);
    return value;
}

}  // namespace pgm_detail

/// Reads a binary (P5) 8-bit PGM into a grid scaled to [0, 1].
inline Grid read_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("pgm: cannot open " + path.string());
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P5") throw std::runtime_error("pgm: not a binary PGM: " + path.string());
    const int cols = pgm_detail::next_header_int(in, path.string());
    const int rows = pgm_detail::next_header_int(in, path.string());
    const int maxval = pgm_detail::next_header_int(in, path.string());
    if (cols <= 0 || rows <= 0) throw std::runtime_error("pgm: bad dimensions in " + path.string());
    if (maxval <= 0 || maxval > 255)
        throw std::runtime_error("pgm: unsupported maxval in " + path.string());
    in.get();  // single whitespace byte before the raster
    std::vector<std::uint8_t> raster(static_cast<std::size_t>(rows) * cols);
    in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (!in) throw std::runtime_error("pgm: truncated raster in " + path.string());
    Grid img(rows, cols);
    const double scale = 1.0 / maxval;
    for (std::size_t i = 0; i < raster.size(); ++i) img.data()[i] = raster[i] * scale;
    return img;
}

inline void write_pgm_bytes(const std::filesystem::path& path, int rows, int cols,
                            const std::vector<std::uint8_t>& raster) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("pgm: cannot create " + path.string());
    out << "P5\n" << cols << ' ' << rows << "\n255\n";
    out.write(reinterpret_cast<const char*>(raster.data()),
              static_cast<std::streamsize>(raster.size()));
    if (!out) throw std::runtime_error("pgm: write failed for " + path.string());
}

/// Writes a [0, 1]-valued grid as an 8-bit PGM (values clamped).
inline void write_pgm(const std::filesystem::path& path, const Grid& img) {
    std::vector<std::uint8_t> raster(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) {
        double v = std::clamp(img.data()[i], 0.0, 1.0);
        raster[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
    write_pgm_bytes(path, img.rows(), img.cols(), raster);
}

/// Writes a grid min-max normalized to the full 8-bit range (flat input
/// maps to all zeros).
inline void write_pgm_normalized(const std::filesystem::path& path, const Grid& img) {
    const auto [mn, mx] = std::minmax_element(img.begin(), img.end());
    std::vector<std::uint8_t> raster(img.size(), 0);
    if (*mx > *mn) {
        const double scale = 255.0 / (*mx - *mn);
        for (std::size_t i = 0; i < img.size(); ++i)
            raster[i] = static_cast<std::uint8_t>(std::lround((img.data()[i] - *mn) * scale));
    }
    write_pgm_bytes(path, img.rows(), img.cols(), raster);
}

}  // namespace palmscat
