#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "palmscat/classify.hpp"
#include "palmscat/dataset.hpp"
#include "palmscat/features.hpp"
#include "palmscat/pca.hpp"

namespace palmscat {

/// Extracted features for a whole dataset. Vectors are float32, row-major,
/// one row per sample; rows follow (class, sample_index) order, so the
/// sample id of a row is its occurrence index within its class.
struct FeatureCache {
    FeatureSchema schema;
    std::vector<float> vectors;     // count() x schema.dim()
    std::vector<std::uint32_t> labels;

    int count() const { return static_cast<int>(labels.size()); }

    std::span<const float> row(int i) const {
        return {vectors.data() + static_cast<std::size_t>(i) * schema.dim(),
                static_cast<std::size_t>(schema.dim())};
    }
};

namespace io_detail {

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>((v >> 8) & 0xff),
                                static_cast<unsigned char>((v >> 16) & 0xff),
                                static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& in, const std::string& what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("cache: truncated " + what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline float get_f32(std::istream& in, const std::string& what) {
    return std::bit_cast<float>(get_u32(in, what));
}
inline void put_f64(std::ostream& out, double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    put_u32(out, static_cast<std::uint32_t>(u & 0xffffffffull));
    put_u32(out, static_cast<std::uint32_t>(u >> 32));
}
inline double get_f64(std::istream& in, const std::string& what) {
    const std::uint64_t lo = get_u32(in, what);
    const std::uint64_t hi = get_u32(in, what);
    return std::bit_cast<double>(lo | (hi << 32));
}

inline void put_string(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, const std::string& what) {
    const std::uint32_t n = get_u32(in, what);
    std::string s(n, '\0');
    in.read(s.data(), n);
    if (!in) throw std::runtime_error("cache: truncated " + what);
    return s;
}

inline nlohmann::json schema_to_json(const FeatureSchema& s) {
    return {{"image_size", s.image_size}, {"block_size", s.block_size},
            {"scales", s.scales},         {"orientations", s.orientations},
            {"layers", s.layers},         {"dim", s.dim()}};
}

inline FeatureSchema schema_from_json(const nlohmann::json& j) {
    FeatureSchema s;
    s.image_size = j.at("image_size").get<int>();
    s.block_size = j.at("block_size").get<int>();
    s.scales = j.at("scales").get<int>();
    s.orientations = j.at("orientations").get<int>();
    s.layers = j.at("layers").get<int>();
    s.validate();
    if (j.at("dim").get<int>() != s.dim())
        throw std::runtime_error("cache: schema dim is inconsistent with its parameters");
    return s;
}

/// Writes through a temporary file in the same directory and renames, so a
/// failed write never leaves a partial file at the target path.
template <typename WriteBody>
void atomic_write(const std::filesystem::path& path, WriteBody&& body) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cache: cannot create " + tmp.string());
        body(out);
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw std::runtime_error("cache: write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// SCF1 feature cache
// ---------------------------------------------------------------------------
// Layout (all integers little-endian):
//   magic "SCF1" | u32 version=1 | u32 N | u32 d | u32 distinct-label-count |
//   N*d float32 row-major vectors | N u32 labels |
//   u32-length-prefixed UTF-8 JSON schema string.

inline constexpr char kCacheMagic[4] = {'S', 'C', 'F', '1'};

inline void write_feature_cache(const std::filesystem::path& path, const FeatureCache& cache) {
    if (cache.vectors.size() !=
        static_cast<std::size_t>(cache.count()) * static_cast<std::size_t>(cache.schema.dim()))
        throw std::invalid_argument("cache: vector payload does not match N x dim");
    std::vector<std::uint32_t> distinct(cache.labels.begin(), cache.labels.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    io_detail::atomic_write(path, [&](std::ostream& out) {
        out.write(kCacheMagic, 4);
        io_detail::put_u32(out, 1);
        io_detail::put_u32(out, static_cast<std::uint32_t>(cache.count()));
        io_detail::put_u32(out, static_cast<std::uint32_t>(cache.schema.dim()));
        io_detail::put_u32(out, static_cast<std::uint32_t>(distinct.size()));
        for (float v : cache.vectors) io_detail::put_f32(out, v);
        for (std::uint32_t l : cache.labels) io_detail::put_u32(out, l);
        io_detail::put_string(out, io_detail::schema_to_json(cache.schema).dump());
    });
}

inline FeatureCache read_feature_cache(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cache: cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kCacheMagic, 4))
        throw std::runtime_error("cache: bad magic in " + path.string());
    if (io_detail::get_u32(in, "version") != 1)
        throw std::runtime_error("cache: unsupported version in " + path.string());
    const std::uint32_t n = io_detail::get_u32(in, "count");
    const std::uint32_t d = io_detail::get_u32(in, "dim");
    const std::uint32_t label_count = io_detail::get_u32(in, "label count");

    FeatureCache cache;
    cache.vectors.resize(static_cast<std::size_t>(n) * d);
    for (float& v : cache.vectors) v = io_detail::get_f32(in, "vectors");
    cache.labels.resize(n);
    for (auto& l : cache.labels) l = io_detail::get_u32(in, "labels");
    const std::string schema_json = io_detail::get_string(in, "schema");
    cache.schema = io_detail::schema_from_json(nlohmann::json::parse(schema_json));

    if (cache.schema.dim() != static_cast<int>(d))
        throw std::runtime_error("cache: header dim does not match schema in " + path.string());
    std::vector<std::uint32_t> distinct(cache.labels.begin(), cache.labels.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() != label_count)
        throw std::runtime_error("cache: label count does not match payload in " + path.string());
    return cache;
}

// ---------------------------------------------------------------------------
// Trained pipeline model (PCA + classifier), magic "PSM1"
// ---------------------------------------------------------------------------

struct PipelineModel {
    FeatureSchema schema;
    SplitSpec split;                // split used at training time
    std::string classifier;         // "nn" or "svm"
    int pca_k = 0;
    double feature_scale = 1.0;     // applied to projections before matching
    PcaModel pca;                   // stores only the first pca_k axes
    GalleryIndex gallery;           // classifier == "nn"
    SvmModel svm;                   // classifier == "svm"
};

inline constexpr char kModelMagic[4] = {'P', 'S', 'M', '1'};

inline void save_model(const std::filesystem::path& path, const PipelineModel& m) {
    io_detail::atomic_write(path, [&](std::ostream& out) {
        out.write(kModelMagic, 4);
        io_detail::put_u32(out, 1);
        io_detail::put_string(out, io_detail::schema_to_json(m.schema).dump());
        io_detail::put_u32(out, static_cast<std::uint32_t>(m.split.train_per_class));
        io_detail::put_u32(out, static_cast<std::uint32_t>(m.split.seed & 0xffffffffull));
        io_detail::put_u32(out, static_cast<std::uint32_t>(m.split.seed >> 32));
        io_detail::put_u32(out, m.split.mode == SplitMode::first_k ? 0 : 1);
        io_detail::put_string(out, m.classifier);
        io_detail::put_u32(out, static_cast<std::uint32_t>(m.pca_k));
        io_detail::put_f64(out, m.feature_scale);

        io_detail::put_u32(out, static_cast<std::uint32_t>(m.pca.dim()));
        io_detail::put_u32(out, static_cast<std::uint32_t>(m.pca.k_max()));
        for (double v : m.pca.mean) io_detail::put_f64(out, v);
        for (double v : m.pca.eigenvalues) io_detail::put_f64(out, v);
        for (const auto& axis : m.pca.components)
            for (double v : axis) io_detail::put_f64(out, v);

        if (m.classifier == "nn") {
            io_detail::put_u32(out, static_cast<std::uint32_t>(m.gallery.templates.size()));
            io_detail::put_u32(out, static_cast<std::uint32_t>(m.gallery.dim()));
            for (const auto& t : m.gallery.templates) {
                io_detail::put_u32(out, static_cast<std::uint32_t>(t.label));
                io_detail::put_u32(out, static_cast<std::uint32_t>(t.sample_id));
                for (double v : t.vec) io_detail::put_f64(out, v);
            }
        } else {
            io_detail::put_f64(out, m.svm.c_penalty);
            io_detail::put_f64(out, m.svm.tol);
            io_detail::put_u32(out, static_cast<std::uint32_t>(m.svm.classes.size()));
            for (int c : m.svm.classes) io_detail::put_u32(out, static_cast<std::uint32_t>(c));
            io_detail::put_u32(out, static_cast<std::uint32_t>(m.svm.pairs.size()));
            io_detail::put_u32(out, static_cast<std::uint32_t>(m.pca_k + 1));
            for (const auto& pair : m.svm.pairs) {
                io_detail::put_u32(out, static_cast<std::uint32_t>(pair.class_a));
                io_detail::put_u32(out, static_cast<std::uint32_t>(pair.class_b));
                for (double v : pair.w) io_detail::put_f64(out, v);
            }
        }
    });
}

inline PipelineModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("model: cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != std::string(kModelMagic, 4))
        throw std::runtime_error("model: bad magic in " + path.string());
    if (io_detail::get_u32(in, "version") != 1)
        throw std::runtime_error("model: unsupported version in " + path.string());

    PipelineModel m;
    m.schema = io_detail::schema_from_json(
        nlohmann::json::parse(io_detail::get_string(in, "schema")));
    m.split.train_per_class = static_cast<int>(io_detail::get_u32(in, "split"));
    const std::uint64_t seed_lo = io_detail::get_u32(in, "split seed");
    const std::uint64_t seed_hi = io_detail::get_u32(in, "split seed");
    m.split.seed = seed_lo | (seed_hi << 32);
    m.split.mode = io_detail::get_u32(in, "split mode") == 0 ? SplitMode::first_k
                                                             : SplitMode::random_k;
    m.classifier = io_detail::get_string(in, "classifier");
    m.pca_k = static_cast<int>(io_detail::get_u32(in, "pca k"));
    m.feature_scale = io_detail::get_f64(in, "feature scale");

    const auto dim = io_detail::get_u32(in, "pca dim");
    const auto k_max = io_detail::get_u32(in, "pca k_max");
    m.pca.mean.resize(dim);
    for (double& v : m.pca.mean) v = io_detail::get_f64(in, "pca mean");
    m.pca.eigenvalues.resize(k_max);
    for (double& v : m.pca.eigenvalues) v = io_detail::get_f64(in, "pca eigenvalues");
    m.pca.components.assign(k_max, std::vector<double>(dim));
    for (auto& axis : m.pca.components)
        for (double& v : axis) v = io_detail::get_f64(in, "pca components");

    if (m.classifier == "nn") {
        const auto n = io_detail::get_u32(in, "gallery size");
        const auto gdim = io_detail::get_u32(in, "gallery dim");
        for (std::uint32_t i = 0; i < n; ++i) {
            GalleryTemplate t;
            t.label = static_cast<int>(io_detail::get_u32(in, "gallery label"));
            t.sample_id = static_cast<int>(io_detail::get_u32(in, "gallery sample id"));
            t.vec.resize(gdim);
            for (double& v : t.vec) v = io_detail::get_f64(in, "gallery vector");
            m.gallery.templates.push_back(std::move(t));
        }
    } else if (m.classifier == "svm") {
        m.svm.c_penalty = io_detail::get_f64(in, "svm C");
        m.svm.tol = io_detail::get_f64(in, "svm tol");
        m.svm.classes.resize(io_detail::get_u32(in, "svm classes"));
        for (int& c : m.svm.classes) c = static_cast<int>(io_detail::get_u32(in, "svm class"));
        const auto n_pairs = io_detail::get_u32(in, "svm pairs");
        const auto wdim = io_detail::get_u32(in, "svm weight dim");
        for (std::uint32_t i = 0; i < n_pairs; ++i) {
            PairClassifier pc;
            pc.class_a = static_cast<int>(io_detail::get_u32(in, "svm pair a"));
            pc.class_b = static_cast<int>(io_detail::get_u32(in, "svm pair b"));
            pc.w.resize(wdim);
            for (double& v : pc.w) v = io_detail::get_f64(in, "svm weights");
            m.svm.pairs.push_back(std::move(pc));
        }
    } else {
        throw std::runtime_error("model: unknown classifier '" + m.classifier + "'");
    }
    return m;
}

}  // namespace palmscat
