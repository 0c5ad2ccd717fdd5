#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "palmscat/grid.hpp"
#include "palmscat/image_io.hpp"

namespace palmscat {

struct Sample {
    Grid image;
    int class_id = 0;
    int sample_index = 0;  // unique within the class
};

/// Images grouped by identity. `samples_per_class` is the smallest per-class
/// count (directory trees may be ragged; generated sets are uniform).
struct LabeledDataset {
    std::vector<Sample> samples;
    int n_classes = 0;
    int samples_per_class = 0;
    std::vector<std::string> class_names;  // empty for synthetic data
};

enum class SplitMode { first_k, random_k };

struct SplitSpec {
    int train_per_class = 6;
    std::uint64_t seed = 0;
    SplitMode mode = SplitMode::random_k;
};

namespace dataset_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t a,
                                 std::uint64_t b = 0) {
    return splitmix64(splitmix64(splitmix64(seed ^ stream) ^ a) ^ b);
}

}  // namespace dataset_detail

// ---------------------------------------------------------------------------
// Directory ingestion (one subdirectory per class)
// ---------------------------------------------------------------------------

struct LoadRejection {
    std::string path;
    std::string reason;
};

struct LoadResult {
    LabeledDataset dataset;
    std::vector<LoadRejection> rejected;
};

/// Loads `root/<class>/<sample>.pgm` trees. Classes are ordered by directory
/// name and samples by file name, so ids are deterministic. Files that
/// cannot be decoded or do not match `size` are listed in the rejection
/// report and skipped; classes left empty are reported and dropped.
inline LoadResult load_directory(const std::filesystem::path& root, int size) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(root))
        throw std::runtime_error("load_directory: not a directory: " + root.string());

    std::vector<fs::path> class_dirs;
    for (const auto& entry : fs::directory_iterator(root))
        if (entry.is_directory()) class_dirs.push_back(entry.path());
    std::sort(class_dirs.begin(), class_dirs.end());
    if (class_dirs.empty())
        throw std::runtime_error("load_directory: no classes found under " + root.string());

    LoadResult result;
    int class_id = 0;
    int min_count = std::numeric_limits<int>::max();
    for (const auto& dir : class_dirs) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            const auto ext = entry.path().extension().string();
            if (ext == ".pgm" || ext == ".png") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());

        int sample_index = 0;
        for (const auto& file : files) {
            if (file.extension() == ".png") {
                result.rejected.push_back(
                    {file.string(), "PNG input is not supported; convert to binary PGM"});
                continue;
            }
            Grid img;
            try {
                img = read_pgm(file);
            } catch (const std::exception& e) {
                result.rejected.push_back({file.string(), e.what()});
                continue;
            }
            if (img.rows() != size || img.cols() != size) {
                result.rejected.push_back(
                    {file.string(), "expected " + std::to_string(size) + "x" +
                                        std::to_string(size) + ", got " +
                                        std::to_string(img.cols()) + "x" +
                                        std::to_string(img.rows())});
                continue;
            }
            result.dataset.samples.push_back({std::move(img), class_id, sample_index++});
        }
        if (sample_index == 0) {
            result.rejected.push_back({dir.string(), "empty class (no usable images)"});
            continue;
        }
        result.dataset.class_names.push_back(dir.filename().string());
        min_count = std::min(min_count, sample_index);
        ++class_id;
    }
    if (class_id == 0)
        throw std::runtime_error("load_directory: no classes found under " + root.string());
    result.dataset.n_classes = class_id;
    result.dataset.samples_per_class = min_count;
    return result;
}

// ---------------------------------------------------------------------------
// Synthetic palmprint-like textures
// ---------------------------------------------------------------------------

namespace dataset_detail {

struct Grating {
    int cycles = 0;       // integer cycles across the image (exactly periodic)
    double theta = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
};

struct Ridge {
    double theta = 0.0;   // line direction
    double offset = 0.0;  // perpendicular offset from the image centre
    double curvature = 0.0;
    double depth = 0.0;
    double width = 0.0;
};

struct ClassSignature {
    double base = 0.0;
    std::vector<Grating> gratings;
    std::vector<Ridge> ridges;
};

inline ClassSignature draw_signature(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    ClassSignature sig;
    sig.base = 0.45 + 0.2 * unit(rng);
    const int n_gratings = 3 + static_cast<int>(rng() % 4);  // 3..6
    for (int i = 0; i < n_gratings; ++i) {
        Grating g;
        g.cycles = 3 + static_cast<int>(rng() % 18);  // 3..20
        g.theta = std::numbers::pi * unit(rng);
        g.amplitude = 0.06 + 0.10 * unit(rng);
        g.phase = 2.0 * std::numbers::pi * unit(rng);
        sig.gratings.push_back(g);
    }
    const int n_ridges = 2 + static_cast<int>(rng() % 2);  // 2..3
    for (int i = 0; i < n_ridges; ++i) {
        Ridge r;
        r.theta = std::numbers::pi * unit(rng);
        r.offset = (unit(rng) - 0.5) * 0.6;       // fraction of the image size
        r.curvature = (unit(rng) - 0.5) * 12.0;   // bend across the image
        r.depth = 0.15 + 0.15 * unit(rng);
        r.width = 1.5 + 2.0 * unit(rng);
        sig.ridges.push_back(r);
    }
    return sig;
}

inline Grid render_signature(const ClassSignature& sig, int size) {
    Grid img(size, size, sig.base);
    const double centre = 0.5 * (size - 1);
    for (const auto& g : sig.gratings) {
        const double freq = 2.0 * std::numbers::pi * g.cycles / size;
        const double cx = std::cos(g.theta), sy = std::sin(g.theta);
        for (int r = 0; r < size; ++r)
            for (int c = 0; c < size; ++c)
                img(r, c) += g.amplitude * std::sin(freq * (c * cx + r * sy) + g.phase);
    }
    for (const auto& rd : sig.ridges) {
        const double cx = std::cos(rd.theta), sy = std::sin(rd.theta);
        const double inv_2w2 = 1.0 / (2.0 * rd.width * rd.width);
        for (int r = 0; r < size; ++r) {
            for (int c = 0; c < size; ++c) {
                const double along = (c - centre) * cx + (r - centre) * sy;
                const double across = -(c - centre) * sy + (r - centre) * cx;
                const double target =
                    rd.offset * size + rd.curvature * (along / size) * (along / size);
                const double d = across - target;
                img(r, c) -= rd.depth * std::exp(-d * d * inv_2w2);
            }
        }
    }
    return img;
}

}  // namespace dataset_detail

/// Generates a deterministic synthetic dataset: each class gets a distinct
/// oriented-grating texture crossed by a few dark smooth ridges; each sample
/// applies a circular shift in [-3,3]^2 pixels, Gaussian pixel noise
/// (sigma 0.02) and a +-5% brightness factor. Identical arguments produce a
/// bit-identical dataset; per-class and per-sample draws use derived seeds,
/// so generation order does not matter.
inline LabeledDataset synth_generate(int n_classes, int per_class, int size,
                                     std::uint64_t seed) {
    if (n_classes <= 0 || per_class <= 0 || size <= 0)
        throw std::invalid_argument("synth_generate: counts and size must be positive");
    if ((size & (size - 1)) != 0)
        throw std::invalid_argument("synth_generate: size must be a power of two");

    constexpr std::uint64_t kSignatureStream = 0x51a7u;
    constexpr std::uint64_t kSampleStream = 0x5a3bu;

    LabeledDataset ds;
    ds.n_classes = n_classes;
    ds.samples_per_class = per_class;
    ds.samples.reserve(static_cast<std::size_t>(n_classes) * per_class);

    for (int cls = 0; cls < n_classes; ++cls) {
        const auto sig = dataset_detail::draw_signature(
            dataset_detail::derive_seed(seed, kSignatureStream, static_cast<std::uint64_t>(cls)));
        const Grid base = dataset_detail::render_signature(sig, size);

        for (int s = 0; s < per_class; ++s) {
            std::mt19937_64 rng(dataset_detail::derive_seed(
                seed, kSampleStream, static_cast<std::uint64_t>(cls),
                static_cast<std::uint64_t>(s)));
            const int dr = static_cast<int>(rng() % 7) - 3;
            const int dc = static_cast<int>(rng() % 7) - 3;
            std::uniform_real_distribution<double> bright(0.95, 1.05);
            const double gain = bright(rng);
            std::normal_distribution<double> noise(0.0, 0.02);

            Grid img = circular_shift(base, dr, dc);
            for (auto& v : img) v = std::clamp(v * gain + noise(rng), 0.0, 1.0);
            ds.samples.push_back({std::move(img), cls, s});
        }
    }
    return ds;
}

/// Writes a dataset as the `root/<class>/<sample>.pgm` layout.
inline void export_dataset(const LabeledDataset& ds, const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    char buf[32];
    for (const auto& sample : ds.samples) {
        std::snprintf(buf, sizeof buf, "class_%04d", sample.class_id);
        const fs::path dir = root / buf;
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw std::runtime_error("export_dataset: cannot create " + dir.string());
        std::snprintf(buf, sizeof buf, "sample_%03d.pgm", sample.sample_index);
        write_pgm(dir / buf, sample.image);
    }
}

// ---------------------------------------------------------------------------
// Train/test splitting
// ---------------------------------------------------------------------------

struct SplitPlan {
    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> test_rows;
};

/// Splits row indices per class: k rows to train, the rest to test.
/// `first_k` follows within-class order; `random_k` permutes each class with
/// a seed derived from (spec.seed, class), so the plan is reproducible and
/// independent of class order. Row order within each class follows the input
/// order, which for datasets and caches is the sample-index order.
inline SplitPlan split_plan(const std::vector<int>& class_of_row, const SplitSpec& spec) {
    std::vector<int> classes = class_of_row;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.empty()) throw std::invalid_argument("split: empty dataset");

    SplitPlan plan;
    for (int cls : classes) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < class_of_row.size(); ++i)
            if (class_of_row[i] == cls) rows.push_back(i);
        if (spec.train_per_class < 1 ||
            spec.train_per_class >= static_cast<int>(rows.size()))
            throw std::invalid_argument(
                "split: train_per_class must lie in [1, samples_per_class)");
        if (spec.mode == SplitMode::random_k) {
            std::mt19937_64 rng(dataset_detail::derive_seed(spec.seed, 0x5917u,
                                                            static_cast<std::uint64_t>(cls)));
            for (std::size_t i = rows.size(); i > 1; --i)
                std::swap(rows[i - 1], rows[rng() % i]);
        }
        for (std::size_t i = 0; i < rows.size(); ++i)
            (static_cast<int>(i) < spec.train_per_class ? plan.train_rows : plan.test_rows)
                .push_back(rows[i]);
    }
    std::sort(plan.train_rows.begin(), plan.train_rows.end());
    std::sort(plan.test_rows.begin(), plan.test_rows.end());
    return plan;
}

/// Splits a dataset into disjoint train/test parts covering every sample.
inline std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& ds,
                                                       const SplitSpec& spec) {
    std::vector<int> class_of_row(ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        class_of_row[i] = ds.samples[i].class_id;
    const SplitPlan plan = split_plan(class_of_row, spec);

    auto subset = [&](const std::vector<std::size_t>& rows) {
        LabeledDataset out;
        out.n_classes = ds.n_classes;
        out.class_names = ds.class_names;
        int min_count = std::numeric_limits<int>::max();
        std::vector<int> counts(static_cast<std::size_t>(ds.n_classes), 0);
        for (std::size_t r : rows) {
            out.samples.push_back(ds.samples[r]);
            ++counts[static_cast<std::size_t>(ds.samples[r].class_id)];
        }
        for (int c : counts) min_count = std::min(min_count, c);
        out.samples_per_class = out.samples.empty() ? 0 : min_count;
        return out;
    };
    return {subset(plan.train_rows), subset(plan.test_rows)};
}

}  // namespace palmscat
