#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "palmscat/experiment.hpp"

using namespace palmscat;
namespace fs = std::filesystem;

namespace {

struct SmallPipeline {
    LabeledDataset ds = synth_generate(8, 6, 64, 404);
    FeatureSchema schema{64, 32, 4, 4, 2};
    FilterBank bank = build_filter_bank({.scales = 4, .orientations = 4, .size = 32});
    FeatureCache cache = extract_all(ds, schema, bank);
};

const SmallPipeline& pipeline() {
    static SmallPipeline p;
    return p;
}

}  // namespace

TEST_CASE("extract_all is independent of the thread count") {
    const auto& p = pipeline();
    const FeatureCache serial = extract_all(p.ds, p.schema, p.bank, 1);
    const FeatureCache threaded = extract_all(p.ds, p.schema, p.bank, 4);
    REQUIRE(serial.vectors == threaded.vectors);
    REQUIRE(serial.labels == threaded.labels);
    REQUIRE(serial.count() == 48);
}

TEST_CASE("evaluate_split reaches high accuracy on easy synthetic data") {
    const auto& p = pipeline();
    std::vector<int> class_of_row(p.cache.labels.begin(), p.cache.labels.end());
    const SplitPlan plan = split_plan(class_of_row, {3, 11, SplitMode::random_k});

    const EvalOutcome nn = evaluate_split(p.cache, plan, ClassifierKind::nn, 10,
                                          PcaFitOn::train);
    REQUIRE(nn.total == 24);
    REQUIRE(nn.accuracy >= 0.9);

    const EvalOutcome svm = evaluate_split(p.cache, plan, ClassifierKind::svm, 10,
                                           PcaFitOn::train);
    REQUIRE(svm.accuracy >= 0.9);
}

TEST_CASE("evaluate_split rejects out-of-range K") {
    const auto& p = pipeline();
    std::vector<int> class_of_row(p.cache.labels.begin(), p.cache.labels.end());
    const SplitPlan plan = split_plan(class_of_row, {3, 11, SplitMode::random_k});
    REQUIRE_THROWS_AS(
        evaluate_split(p.cache, plan, ClassifierKind::nn, 1000, PcaFitOn::train),
        std::invalid_argument);
}

TEST_CASE("pca_sweep reports one row per requested K and keeps going on errors") {
    const auto& p = pipeline();
    const ExperimentReport report =
        pca_sweep(p.cache, ClassifierKind::nn, {4, 10000, 8}, {3, 11, SplitMode::random_k});
    REQUIRE(report.rows.size() == 3);
    REQUIRE(report.rows[0].param == 4);   // sorted by the swept parameter
    REQUIRE(report.rows[1].param == 8);
    REQUIRE(report.rows[2].param == 10000);
    REQUIRE(report.rows[0].ok);
    REQUIRE(report.rows[1].ok);
    REQUIRE_FALSE(report.rows[2].ok);     // K exceeds K_max but the sweep continued
    REQUIRE(report.rows[0].accuracy >= 0.0);
    REQUIRE(report.rows[0].accuracy <= 1.0);
    REQUIRE_FALSE(report.config_echo.empty());
}

TEST_CASE("train_count_sweep averages over seeds") {
    const auto& p = pipeline();
    const ExperimentReport report = train_count_sweep(p.cache, ClassifierKind::nn, {2, 4},
                                                      100, 3, 8, PcaFitOn::train);
    REQUIRE(report.rows.size() == 6);  // 2 params x 3 seeds
    const auto means = mean_accuracy_by_param(report);
    REQUIRE(means.size() == 2);
    REQUIRE(means[0].first == 2);
    REQUIRE(means[1].first == 4);
    for (const auto& [param, acc] : means) {
        REQUIRE(acc >= 0.0);
        REQUIRE(acc <= 1.0);
    }
    // Seeds differ per row within one parameter.
    REQUIRE(report.rows[0].seed != report.rows[1].seed);
}

TEST_CASE("csv report uses the pinned column layout") {
    const auto& p = pipeline();
    const ExperimentReport report =
        pca_sweep(p.cache, ClassifierKind::svm, {4, 8}, {3, 11, SplitMode::random_k});
    const fs::path csv = fs::temp_directory_path() / "palmscat_report.csv";
    write_report_csv(csv, report);

    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    REQUIRE(header == "param,classifier,accuracy,seed,wall_ms");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        REQUIRE(line.find("svm") != std::string::npos);
        ++rows;
    }
    REQUIRE(rows == 2);
    fs::remove(csv);
}

TEST_CASE("report table echoes the configuration") {
    const auto& p = pipeline();
    const ExperimentReport report =
        pca_sweep(p.cache, ClassifierKind::nn, {4}, {3, 11, SplitMode::random_k});
    const std::string table = format_report_table(report, "K");
    REQUIRE(table.find("pca-sweep") != std::string::npos);
    REQUIRE(table.find("train_per_class=3") != std::string::npos);
    REQUIRE(table.find("seed=11") != std::string::npos);
}

TEST_CASE("bench reports per-stage timings and scales roughly linearly") {
    const auto& p = pipeline();
    const BenchReport r4 = bench_matching(p.ds, p.schema, p.bank, ClassifierKind::nn, 8,
                                          {3, 11, SplitMode::random_k}, 4);
    REQUIRE(r4.images == 4);
    REQUIRE(r4.extract.mean_ms > 0.0);
    REQUIRE(r4.project.mean_ms >= 0.0);
    REQUIRE(r4.match.mean_ms >= 0.0);
    REQUIRE(r4.total.mean_ms >= r4.extract.mean_ms);

    // Doubling the image count roughly doubles the matching wall time.
    // One retry absorbs scheduler noise on loaded machines.
    bool linear = false;
    for (int attempt = 0; attempt < 2 && !linear; ++attempt) {
        const BenchReport a = bench_matching(p.ds, p.schema, p.bank, ClassifierKind::nn, 8,
                                             {3, 11, SplitMode::random_k}, 6);
        const BenchReport b = bench_matching(p.ds, p.schema, p.bank, ClassifierKind::nn, 8,
                                             {3, 11, SplitMode::random_k}, 12);
        const double ratio = (b.total.mean_ms * 12) / (a.total.mean_ms * 6);
        linear = ratio >= 1.6 && ratio <= 2.4;
    }
    REQUIRE(linear);
}

TEST_CASE("extract_all propagates worker failures") {
    const auto& p = pipeline();
    LabeledDataset broken = p.ds;
    broken.samples[7].image = Grid(16, 16, 0.5);  // wrong dimensions
    REQUIRE_THROWS_AS(extract_all(broken, p.schema, p.bank, 4), std::invalid_argument);
}

TEST_CASE("pca can be fitted on all rows to reproduce joint-fit protocols") {
    const auto& p = pipeline();
    std::vector<int> class_of_row(p.cache.labels.begin(), p.cache.labels.end());
    const SplitPlan plan = split_plan(class_of_row, {3, 11, SplitMode::random_k});

    // Joint fitting supports K up to N-1 instead of train_count-1.
    const int k_train_only_max = static_cast<int>(plan.train_rows.size()) - 1;
    const EvalOutcome joint = evaluate_split(p.cache, plan, ClassifierKind::nn,
                                             k_train_only_max + 4, PcaFitOn::all);
    REQUIRE(joint.total == 24);
    REQUIRE(joint.accuracy >= 0.9);
    REQUIRE_THROWS_AS(evaluate_split(p.cache, plan, ClassifierKind::nn,
                                     k_train_only_max + 4, PcaFitOn::train),
                      std::invalid_argument);
}
