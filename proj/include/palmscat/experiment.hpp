#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "palmscat/cache.hpp"
#include "palmscat/classify.hpp"
#include "palmscat/dataset.hpp"
#include "palmscat/features.hpp"
#include "palmscat/filterbank.hpp"
#include "palmscat/pca.hpp"

namespace palmscat {

enum class ClassifierKind { nn, svm };
enum class PcaFitOn { train, all };

inline const char* to_string(ClassifierKind c) {
    return c == ClassifierKind::nn ? "nn" : "svm";
}

inline double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

// ---------------------------------------------------------------------------
// Bulk feature extraction
// ---------------------------------------------------------------------------

/// Extracts features for every sample, optionally across threads (samples
/// are independent and results land in disjoint rows, so the output does not
/// depend on the thread count).
inline FeatureCache extract_all(const LabeledDataset& ds, const FeatureSchema& schema,
                                const FilterBank& bank, int threads = 0) {
    schema.validate();
    const int n = static_cast<int>(ds.samples.size());
    FeatureCache cache;
    cache.schema = schema;
    cache.vectors.assign(static_cast<std::size_t>(n) * schema.dim(), 0.0f);
    cache.labels.resize(n);

    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::clamp(threads, 1, std::max(1, n));

    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&](int first, int step) {
        try {
            for (int i = first; i < n; i += step) {
                const FeatureVector f = extract_features(ds.samples[i].image, schema, bank);
                float* row = cache.vectors.data() + static_cast<std::size_t>(i) * schema.dim();
                for (int j = 0; j < schema.dim(); ++j) row[j] = static_cast<float>(f[j]);
                cache.labels[i] = static_cast<std::uint32_t>(ds.samples[i].class_id);
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };
    if (threads == 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);
    return cache;
}

// ---------------------------------------------------------------------------
// Single train/evaluate round on a cache
// ---------------------------------------------------------------------------

struct EvalOutcome {
    double accuracy = 0.0;
    int errors = 0;
    int total = 0;
    double train_ms = 0.0;
    double eval_ms = 0.0;
    std::map<std::pair<int, int>, int> confusions;  // (true, predicted) -> count
};

/// Global scale applied to PCA projections before they reach a classifier:
/// the soft-margin objective at the reference C = 1 is only meaningful when
/// the data norms are O(1)-to-O(10), so train vectors are normalized to a
/// fixed mean norm (one common factor; nearest-neighbor geometry is
/// unaffected by construction).
inline constexpr double kClassifierTargetNorm = 8.0;

inline double classifier_input_scale(const std::vector<std::vector<double>>& train_x) {
    double mean_norm = 0.0;
    for (const auto& v : train_x) {
        double sq = 0.0;
        for (double e : v) sq += e * e;
        mean_norm += std::sqrt(sq);
    }
    mean_norm /= static_cast<double>(train_x.size());
    return mean_norm > 0.0 ? kClassifierTargetNorm / mean_norm : 1.0;
}

namespace experiment_detail {

inline std::vector<FeatureVector> rows_as_vectors(const FeatureCache& cache,
                                                  const std::vector<std::size_t>& rows) {
    std::vector<FeatureVector> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) {
        const auto row = cache.row(static_cast<int>(r));
        out.emplace_back(row.begin(), row.end());
    }
    return out;
}

inline std::vector<int> row_labels(const FeatureCache& cache,
                                   const std::vector<std::size_t>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(static_cast<int>(cache.labels[r]));
    return out;
}

}  // namespace experiment_detail

/// Fits PCA (per `fit_on`), projects to K axes, trains the classifier on the
/// train rows and scores the test rows.
inline EvalOutcome evaluate_split(const FeatureCache& cache, const SplitPlan& plan,
                                  ClassifierKind classifier, int pca_k, PcaFitOn fit_on,
                                  double c_penalty = 1.0, double tol = 1e-4) {
    const auto t_train = std::chrono::steady_clock::now();

    std::vector<FeatureVector> fit_rows;
    if (fit_on == PcaFitOn::all) {
        std::vector<std::size_t> all(static_cast<std::size_t>(cache.count()));
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        fit_rows = experiment_detail::rows_as_vectors(cache, all);
    } else {
        fit_rows = experiment_detail::rows_as_vectors(cache, plan.train_rows);
    }
    const PcaModel pca = pca_fit(fit_rows);
    if (pca_k < 1 || pca_k > pca.k_max())
        throw std::invalid_argument("evaluate_split: K out of range (K_max = " +
                                    std::to_string(pca.k_max()) + ")");

    auto project_rows = [&](const std::vector<std::size_t>& rows) {
        std::vector<std::vector<double>> out;
        out.reserve(rows.size());
        for (std::size_t r : rows) {
            const auto row = cache.row(static_cast<int>(r));
            const FeatureVector x(row.begin(), row.end());
            out.push_back(pca_project(pca, x, pca_k));
        }
        return out;
    };
    auto train_x = project_rows(plan.train_rows);
    const auto train_y = experiment_detail::row_labels(cache, plan.train_rows);
    auto test_x = project_rows(plan.test_rows);
    const auto test_y = experiment_detail::row_labels(cache, plan.test_rows);

    const double scale = classifier_input_scale(train_x);
    for (auto& v : train_x)
        for (double& e : v) e *= scale;
    for (auto& v : test_x)
        for (double& e : v) e *= scale;

    EvalOutcome out;
    GalleryIndex gallery;
    SvmModel svm;
    if (classifier == ClassifierKind::nn)
        gallery = make_gallery(train_x, train_y);
    else
        svm = svm_train(train_x, train_y, c_penalty, tol);
    out.train_ms = elapsed_ms(t_train);

    const auto t_eval = std::chrono::steady_clock::now();
    out.total = static_cast<int>(test_x.size());
    for (std::size_t i = 0; i < test_x.size(); ++i) {
        const int predicted = classifier == ClassifierKind::nn
                                  ? nn_predict(gallery, test_x[i]).label
                                  : svm_predict(svm, test_x[i]).label;
        if (predicted != test_y[i]) {
            ++out.errors;
            ++out.confusions[{test_y[i], predicted}];
        }
    }
    out.eval_ms = elapsed_ms(t_eval);
    out.accuracy = out.total == 0 ? 0.0 : 1.0 - static_cast<double>(out.errors) / out.total;
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct SweepRow {
    int param = 0;  // swept value: K for the PCA sweep, k for the train-count sweep
    std::string classifier;
    double accuracy = 0.0;
    std::uint64_t seed = 0;
    double wall_ms = 0.0;
    bool ok = true;
    std::string note;
};

struct ExperimentReport {
    std::string config_echo;
    std::vector<SweepRow> rows;       // sorted by the swept parameter
    std::string confusion_summary;
    double total_ms = 0.0;
};

namespace experiment_detail {

inline std::string summarize_confusions(const EvalOutcome& worst, int param,
                                        const char* param_name) {
    std::ostringstream os;
    os << "worst " << param_name << "=" << param << ": " << worst.errors << "/" << worst.total
       << " errors";
    if (!worst.confusions.empty()) {
        std::vector<std::pair<std::pair<int, int>, int>> top(worst.confusions.begin(),
                                                             worst.confusions.end());
        std::sort(top.begin(), top.end(),
                  [](const auto& a, const auto& b) { return a.second > b.second; });
        os << "; top confusions:";
        for (std::size_t i = 0; i < std::min<std::size_t>(3, top.size()); ++i)
            os << ' ' << top[i].first.first << "->" << top[i].first.second << " (x"
               << top[i].second << ")";
    }
    return os.str();
}

}  // namespace experiment_detail

/// Accuracy vs. number of retained PCA features at a fixed split. Invalid K
/// values produce an error row and the sweep continues.
inline ExperimentReport pca_sweep(const FeatureCache& cache, ClassifierKind classifier,
                                  std::vector<int> k_values, const SplitSpec& split_spec,
                                  PcaFitOn fit_on = PcaFitOn::train, double c_penalty = 1.0,
                                  double tol = 1e-4) {
    const auto t0 = std::chrono::steady_clock::now();
    std::sort(k_values.begin(), k_values.end());

    std::vector<int> class_of_row(cache.labels.begin(), cache.labels.end());
    const SplitPlan plan = split_plan(class_of_row, split_spec);

    ExperimentReport report;
    {
        std::ostringstream os;
        os << "pca-sweep classifier=" << to_string(classifier)
           << " train_per_class=" << split_spec.train_per_class << " seed=" << split_spec.seed
           << " mode=" << (split_spec.mode == SplitMode::first_k ? "first-k" : "random-k")
           << " pca_fit_on=" << (fit_on == PcaFitOn::train ? "train" : "all")
           << " C=" << c_penalty << " tol=" << tol;
        report.config_echo = os.str();
    }

    EvalOutcome worst;
    int worst_param = -1;
    for (int k : k_values) {
        SweepRow row;
        row.param = k;
        row.classifier = to_string(classifier);
        row.seed = split_spec.seed;
        const auto t_row = std::chrono::steady_clock::now();
        try {
            const EvalOutcome outcome =
                evaluate_split(cache, plan, classifier, k, fit_on, c_penalty, tol);
            row.accuracy = outcome.accuracy;
            if (worst_param < 0 || outcome.accuracy < worst.accuracy) {
                worst = outcome;
                worst_param = k;
            }
        } catch (const std::exception& e) {
            row.ok = false;
            row.note = e.what();
        }
        row.wall_ms = elapsed_ms(t_row);
        report.rows.push_back(std::move(row));
    }
    if (worst_param >= 0)
        report.confusion_summary =
            experiment_detail::summarize_confusions(worst, worst_param, "K");
    report.total_ms = elapsed_ms(t0);
    return report;
}

/// Accuracy vs. number of training samples per class; each k is evaluated
/// over `n_seeds` random splits (one row per seed).
inline ExperimentReport train_count_sweep(const FeatureCache& cache, ClassifierKind classifier,
                                          std::vector<int> k_train_values,
                                          std::uint64_t base_seed, int n_seeds, int pca_k,
                                          PcaFitOn fit_on = PcaFitOn::train,
                                          double c_penalty = 1.0, double tol = 1e-4) {
    const auto t0 = std::chrono::steady_clock::now();
    std::sort(k_train_values.begin(), k_train_values.end());
    n_seeds = std::max(1, n_seeds);

    std::vector<int> class_of_row(cache.labels.begin(), cache.labels.end());

    ExperimentReport report;
    {
        std::ostringstream os;
        os << "train-count-sweep classifier=" << to_string(classifier) << " pca_k=" << pca_k
           << " seeds=" << base_seed << ".." << (base_seed + n_seeds - 1)
           << " pca_fit_on=" << (fit_on == PcaFitOn::train ? "train" : "all")
           << " C=" << c_penalty << " tol=" << tol;
        report.config_echo = os.str();
    }

    EvalOutcome worst;
    int worst_param = -1;
    for (int k : k_train_values) {
        for (int s = 0; s < n_seeds; ++s) {
            SweepRow row;
            row.param = k;
            row.classifier = to_string(classifier);
            row.seed = base_seed + static_cast<std::uint64_t>(s);
            const auto t_row = std::chrono::steady_clock::now();
            try {
                const SplitSpec spec{k, row.seed, SplitMode::random_k};
                const SplitPlan plan = split_plan(class_of_row, spec);
                // Clamp K to what the train split can support.
                const int k_cap = static_cast<int>(plan.train_rows.size()) - 1;
                const int k_eff = std::min(pca_k, k_cap);
                const EvalOutcome outcome =
                    evaluate_split(cache, plan, classifier, k_eff, fit_on, c_penalty, tol);
                row.accuracy = outcome.accuracy;
                if (k_eff != pca_k) row.note = "K clamped to " + std::to_string(k_eff);
                if (worst_param < 0 || outcome.accuracy < worst.accuracy) {
                    worst = outcome;
                    worst_param = k;
                }
            } catch (const std::exception& e) {
                row.ok = false;
                row.note = e.what();
            }
            row.wall_ms = elapsed_ms(t_row);
            report.rows.push_back(std::move(row));
        }
    }
    if (worst_param >= 0)
        report.confusion_summary =
            experiment_detail::summarize_confusions(worst, worst_param, "k");
    report.total_ms = elapsed_ms(t0);
    return report;
}

/// Mean accuracy per swept parameter (aggregates the per-seed rows).
inline std::vector<std::pair<int, double>> mean_accuracy_by_param(
    const ExperimentReport& report) {
    std::map<int, std::pair<double, int>> acc;
    for (const auto& row : report.rows) {
        if (!row.ok) continue;
        auto& slot = acc[row.param];
        slot.first += row.accuracy;
        slot.second += 1;
    }
    std::vector<std::pair<int, double>> out;
    for (const auto& [param, sum_count] : acc)
        out.emplace_back(param, sum_count.first / sum_count.second);
    return out;
}

// ---------------------------------------------------------------------------
// Matching-latency benchmark
// ---------------------------------------------------------------------------

struct BenchStage {
    double mean_ms = 0.0;
    double median_ms = 0.0;
};

struct BenchReport {
    int images = 0;
    BenchStage extract, project, match, total;
    double wall_ms = 0.0;

    static BenchStage stage_from(std::vector<double> samples) {
        BenchStage s;
        if (samples.empty()) return s;
        for (double v : samples) s.mean_ms += v;
        s.mean_ms /= static_cast<double>(samples.size());
        std::sort(samples.begin(), samples.end());
        s.median_ms = samples[samples.size() / 2];
        return s;
    }
};

/// Times the per-image pipeline (extract features, project, match) over n
/// query images using a model trained on the dataset's train split.
inline BenchReport bench_matching(const LabeledDataset& ds, const FeatureSchema& schema,
                                  const FilterBank& bank, ClassifierKind classifier, int pca_k,
                                  const SplitSpec& split_spec, int n_images,
                                  double c_penalty = 1.0, double tol = 1e-4) {
    const auto t0 = std::chrono::steady_clock::now();
    auto [train_ds, test_ds] = split(ds, split_spec);

    const FeatureCache train_cache = extract_all(train_ds, schema, bank);
    std::vector<std::size_t> all_rows(static_cast<std::size_t>(train_cache.count()));
    for (std::size_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
    const PcaModel pca =
        pca_fit(experiment_detail::rows_as_vectors(train_cache, all_rows));
    const int k_eff = std::min(pca_k, pca.k_max());

    std::vector<std::vector<double>> train_x;
    train_x.reserve(all_rows.size());
    for (std::size_t r : all_rows) {
        const auto row = train_cache.row(static_cast<int>(r));
        train_x.push_back(pca_project(pca, FeatureVector(row.begin(), row.end()), k_eff));
    }
    const auto train_y = experiment_detail::row_labels(train_cache, all_rows);
    const double scale = classifier_input_scale(train_x);
    for (auto& v : train_x)
        for (double& e : v) e *= scale;

    GalleryIndex gallery;
    SvmModel svm;
    if (classifier == ClassifierKind::nn)
        gallery = make_gallery(train_x, train_y);
    else
        svm = svm_train(train_x, train_y, c_penalty, tol);

    BenchReport report;
    report.images = n_images;
    std::vector<double> t_extract, t_project, t_match, t_total;
    for (int i = 0; i < n_images; ++i) {
        const Grid& img = test_ds.samples[i % test_ds.samples.size()].image;
        const auto s0 = std::chrono::steady_clock::now();
        const FeatureVector f = extract_features(img, schema, bank);
        const double ms_extract = elapsed_ms(s0);
        const auto s1 = std::chrono::steady_clock::now();
        auto z = pca_project(pca, f, k_eff);
        for (double& e : z) e *= scale;
        const double ms_project = elapsed_ms(s1);
        const auto s2 = std::chrono::steady_clock::now();
        volatile int label = classifier == ClassifierKind::nn ? nn_predict(gallery, z).label
                                                              : svm_predict(svm, z).label;
        (void)label;
        const double ms_match = elapsed_ms(s2);
        t_extract.push_back(ms_extract);
        t_project.push_back(ms_project);
        t_match.push_back(ms_match);
        t_total.push_back(ms_extract + ms_project + ms_match);
    }
    report.extract = BenchReport::stage_from(t_extract);
    report.project = BenchReport::stage_from(t_project);
    report.match = BenchReport::stage_from(t_match);
    report.total = BenchReport::stage_from(t_total);
    report.wall_ms = elapsed_ms(t0);
    return report;
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

inline std::string format_report_table(const ExperimentReport& report, const char* param_name) {
    std::ostringstream os;
    os << report.config_echo << "\n";
    os << param_name << "\tclassifier\taccuracy\tseed\twall_ms\n";
    for (const auto& row : report.rows) {
        os << row.param << '\t' << row.classifier << '\t';
        if (row.ok)
            os << row.accuracy;
        else
            os << "error";
        os << '\t' << row.seed << '\t' << row.wall_ms;
        if (!row.note.empty()) os << "\t# " << row.note;
        os << '\n';
    }
    const auto means = mean_accuracy_by_param(report);
    if (!means.empty()) {
        os << "mean accuracy by " << param_name << ":";
        for (const auto& [param, acc] : means) os << ' ' << param << "=" << acc;
        os << '\n';
    }
    if (!report.confusion_summary.empty()) os << report.confusion_summary << '\n';
    return os.str();
}

/// CSV rows: param,classifier,accuracy,seed,wall_ms
inline void write_report_csv(const std::filesystem::path& path,
                             const ExperimentReport& report) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("csv: cannot create " + path.string());
    out << "param,classifier,accuracy,seed,wall_ms\n";
    for (const auto& row : report.rows) {
        out << row.param << ',' << row.classifier << ',';
        if (row.ok)
            out << row.accuracy;
        else
            out << "nan";
        out << ',' << row.seed << ',' << row.wall_ms << '\n';
    }
    if (!out) throw std::runtime_error("csv: write failed for " + path.string());
}

}  // namespace palmscat
