// palmscat command-line tool: filter inspection, synthetic data generation,
// feature extraction with caching, model training/evaluation, the two
// accuracy sweeps and a matching-latency benchmark.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "palmscat/palmscat.hpp"

namespace {

using namespace palmscat;

struct SchemaFlags {
    int size = 128;
    int block = 32;
    int scales = 5;
    int orientations = 6;
    int layers = 2;

    FeatureSchema schema() const {
        FeatureSchema s{size, block, scales, orientations, layers};
        s.validate();
        return s;
    }
    FilterBank bank() const {
        return build_filter_bank({.scales = scales, .orientations = orientations, .size = block});
    }
};

void add_schema_flags(CLI::App* cmd, SchemaFlags& f) {
    cmd->add_option("--size", f.size, "Image edge length in pixels");
    cmd->add_option("--block", f.block, "Processing block edge length");
    cmd->add_option("--scales", f.scales, "Wavelet scale count J");
    cmd->add_option("--orientations", f.orientations, "Wavelet orientation count p");
    cmd->add_option("--layers", f.layers, "Scattering depth m");
}

struct SourceFlags {
    std::string input;   // dataset directory; empty -> synthetic
    int classes = 50;
    int per_class = 12;
    std::uint64_t seed = 1;
};

void add_source_flags(CLI::App* cmd, SourceFlags& f) {
    cmd->add_option("--input", f.input, "Dataset directory (root/<class>/<sample>.pgm)");
    cmd->add_option("--classes", f.classes, "Synthetic class count (when no --input)");
    cmd->add_option("--per-class", f.per_class, "Synthetic samples per class");
    cmd->add_option("--seed", f.seed, "Generator seed");
}

LabeledDataset load_source(const SourceFlags& src, int size) {
    if (!src.input.empty()) {
        LoadResult r = load_directory(src.input, size);
        for (const auto& rej : r.rejected)
            std::cerr << "rejected: " << rej.path << " (" << rej.reason << ")\n";
        return std::move(r.dataset);
    }
    return synth_generate(src.classes, src.per_class, size, src.seed);
}

struct TrainFlags {
    std::string classifier = "svm";
    int pca_k = 200;
    std::string pca_fit_on = "train";
    double c_penalty = 1.0;
    double tol = 1e-4;
    int train_per_class = 6;
    std::string split_mode = "random-k";
    std::uint64_t split_seed = 0;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--classifier", f.classifier, "Classifier: svm or nn")
        ->check(CLI::IsMember({"svm", "nn"}));
    cmd->add_option("--pca-fit-on", f.pca_fit_on, "Fit PCA on: train or all")
        ->check(CLI::IsMember({"train", "all"}));
    cmd->add_option("--c", f.c_penalty, "SVM penalty C");
    cmd->add_option("--tol", f.tol, "SVM solver tolerance");
    cmd->add_option("--train-per-class", f.train_per_class, "Training samples per class k");
    cmd->add_option("--split-mode", f.split_mode, "Split mode: first-k or random-k")
        ->check(CLI::IsMember({"first-k", "random-k"}));
}

SplitSpec split_spec_of(const TrainFlags& f) {
    return {f.train_per_class, f.split_seed,
            f.split_mode == "first-k" ? SplitMode::first_k : SplitMode::random_k};
}

ClassifierKind classifier_of(const TrainFlags& f) {
    return f.classifier == "nn" ? ClassifierKind::nn : ClassifierKind::svm;
}

PcaFitOn fit_on_of(const TrainFlags& f) {
    return f.pca_fit_on == "all" ? PcaFitOn::all : PcaFitOn::train;
}

void echo_effective(const std::string& head, const SchemaFlags& s) {
    std::cout << head << ": size=" << s.size << " block=" << s.block
              << " scales=" << s.scales << " orientations=" << s.orientations
              << " layers=" << s.layers << "\n";
}

int run(int argc, char** argv) {
    CLI::App app{"Palmprint recognition via a directional wavelet scattering transform"};
    app.require_subcommand(1);

    // ---- filters ----
    auto* filters = app.add_subcommand("filters", "Build a filter bank and dump its filters");
    SchemaFlags filters_schema;
    std::string filters_out = "filters_out";
    add_schema_flags(filters, filters_schema);
    filters->add_option("--out", filters_out, "Output directory for PGM images");
    filters->callback([&] {
        const FilterBank bank = filters_schema.bank();
        const int n = dump_filters(bank, filters_out);
        std::cout << "wrote " << n << " filter images to " << filters_out << "\n"
                  << "lp_max=" << bank.lp_max << " lp_min_annulus=" << bank.lp_min_annulus
                  << "\n";
    });

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset as a PGM tree");
    SourceFlags synth_src;
    int synth_size = 128;
    std::string synth_out = "synth_out";
    add_source_flags(synth, synth_src);
    synth->add_option("--size", synth_size, "Image edge length in pixels");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->callback([&] {
        const LabeledDataset ds =
            synth_generate(synth_src.classes, synth_src.per_class, synth_size, synth_src.seed);
        export_dataset(ds, synth_out);
        std::cout << "wrote " << ds.samples.size() << " images (" << ds.n_classes
                  << " classes) to " << synth_out << "\n";
    });

    // ---- extract ----
    auto* extract = app.add_subcommand("extract", "Extract features into an SCF1 cache");
    SchemaFlags extract_schema;
    SourceFlags extract_src;
    std::string extract_out = "features.scf";
    int extract_threads = 0;
    add_schema_flags(extract, extract_schema);
    add_source_flags(extract, extract_src);
    extract->add_option("--out", extract_out, "Cache file path");
    extract->add_option("--threads", extract_threads, "Worker threads (0 = hardware)");
    extract->callback([&] {
        echo_effective("extract", extract_schema);
        const FeatureSchema schema = extract_schema.schema();
        const LabeledDataset ds = load_source(extract_src, schema.image_size);
        const FilterBank bank = extract_schema.bank();
        const FeatureCache cache = extract_all(ds, schema, bank, extract_threads);
        write_feature_cache(extract_out, cache);
        std::cout << "wrote " << cache.count() << " vectors of dim " << cache.schema.dim()
                  << " to " << extract_out << "\n";
    });

    // ---- pca ----
    auto* pca_cmd = app.add_subcommand("pca", "Fit PCA on a cache and report the spectrum");
    std::string pca_cache_path;
    std::string pca_out;
    std::vector<int> pca_k_list{10, 50, 100, 200};
    pca_cmd->add_option("--cache", pca_cache_path, "Input SCF1 cache")->required();
    pca_cmd->add_option("--pca-k", pca_k_list, "K values for the retained-variance table");
    pca_cmd->add_option("--out", pca_out, "Optional model output (PCA only, as an nn model)");
    pca_cmd->callback([&] {
        const FeatureCache cache = read_feature_cache(pca_cache_path);
        std::vector<FeatureVector> rows;
        rows.reserve(cache.count());
        for (int i = 0; i < cache.count(); ++i) {
            const auto row = cache.row(i);
            rows.emplace_back(row.begin(), row.end());
        }
        const PcaModel model = pca_fit(rows);
        std::cout << "fitted on " << cache.count() << " vectors, K_max=" << model.k_max()
                  << "\nK\tretained_variance\n";
        for (int k : pca_k_list)
            if (k >= 1 && k <= model.k_max())
                std::cout << k << '\t' << retained_variance(model, k) << "\n";
            else
                std::cout << k << "\tout of range\n";
        if (!pca_out.empty()) {
            PipelineModel m;
            m.schema = cache.schema;
            m.classifier = "nn";
            m.pca_k = model.k_max();
            m.pca = model;
            save_model(pca_out, m);
            std::cout << "wrote PCA model to " << pca_out << "\n";
        }
    });

    // ---- train ----
    auto* train = app.add_subcommand("train", "Train a classifier on the train split");
    std::string train_cache_path, train_out = "model.psm";
    TrainFlags train_flags;
    train->add_option("--cache", train_cache_path, "Input SCF1 cache")->required();
    train->add_option("--out", train_out, "Model output path");
    add_train_flags(train, train_flags);
    train->add_option("--pca-k", train_flags.pca_k, "Number of PCA features");
    train->add_option("--seed", train_flags.split_seed, "Split permutation seed");
    train->callback([&] {
        const FeatureCache cache = read_feature_cache(train_cache_path);
        const SplitSpec spec = split_spec_of(train_flags);
        std::vector<int> class_of_row(cache.labels.begin(), cache.labels.end());
        const SplitPlan plan = split_plan(class_of_row, spec);

        std::vector<FeatureVector> fit_rows;
        if (fit_on_of(train_flags) == PcaFitOn::all) {
            for (int i = 0; i < cache.count(); ++i) {
                const auto row = cache.row(i);
                fit_rows.emplace_back(row.begin(), row.end());
            }
        } else {
            for (std::size_t r : plan.train_rows) {
                const auto row = cache.row(static_cast<int>(r));
                fit_rows.emplace_back(row.begin(), row.end());
            }
        }
        PcaModel pca = pca_fit(fit_rows);
        const int k = std::min(train_flags.pca_k, pca.k_max());
        if (k != train_flags.pca_k)
            std::cout << "note: K clamped to " << k << " (K_max of the fitted model)\n";
        pca.components.resize(k);
        pca.eigenvalues.resize(k);

        std::vector<std::vector<double>> train_x;
        std::vector<int> train_y;
        for (std::size_t r : plan.train_rows) {
            const auto row = cache.row(static_cast<int>(r));
            train_x.push_back(pca_project(pca, FeatureVector(row.begin(), row.end()), k));
            train_y.push_back(static_cast<int>(cache.labels[r]));
        }
        const double scale = classifier_input_scale(train_x);
        for (auto& v : train_x)
            for (double& e : v) e *= scale;

        PipelineModel m;
        m.schema = cache.schema;
        m.split = spec;
        m.classifier = train_flags.classifier;
        m.pca_k = k;
        m.feature_scale = scale;
        m.pca = std::move(pca);
        if (classifier_of(train_flags) == ClassifierKind::nn)
            m.gallery = make_gallery(train_x, train_y);
        else
            m.svm = svm_train(train_x, train_y, train_flags.c_penalty, train_flags.tol);
        save_model(train_out, m);
        std::cout << "trained " << train_flags.classifier << " on " << train_x.size()
                  << " vectors (K=" << k << "), wrote " << train_out << "\n";
    });

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "Evaluate a trained model on the test split");
    std::string eval_cache_path, eval_model_path;
    eval->add_option("--cache", eval_cache_path, "Input SCF1 cache")->required();
    eval->add_option("--model", eval_model_path, "Trained model")->required();
    eval->callback([&] {
        const FeatureCache cache = read_feature_cache(eval_cache_path);
        const PipelineModel m = load_model(eval_model_path);
        if (!(cache.schema == m.schema))
            throw std::runtime_error("eval: cache schema differs from the model's schema");

        std::vector<int> class_of_row(cache.labels.begin(), cache.labels.end());
        const SplitPlan plan = split_plan(class_of_row, m.split);
        int errors = 0;
        std::map<std::pair<int, int>, int> confusions;
        for (std::size_t r : plan.test_rows) {
            const auto row = cache.row(static_cast<int>(r));
            auto z = pca_project(m.pca, FeatureVector(row.begin(), row.end()), m.pca_k);
            for (double& e : z) e *= m.feature_scale;
            const int truth = static_cast<int>(cache.labels[r]);
            const int predicted = m.classifier == "nn" ? nn_predict(m.gallery, z).label
                                                       : svm_predict(m.svm, z).label;
            if (predicted != truth) {
                ++errors;
                ++confusions[{truth, predicted}];
            }
        }
        const int total = static_cast<int>(plan.test_rows.size());
        std::cout << "accuracy " << (total ? 1.0 - static_cast<double>(errors) / total : 0.0)
                  << " (" << (total - errors) << "/" << total << ")\n";
        if (!confusions.empty()) {
            std::cout << "confusions:";
            for (const auto& [pair, count] : confusions)
                std::cout << ' ' << pair.first << "->" << pair.second << " (x" << count << ")";
            std::cout << "\n";
        }
    });

    // ---- sweep-k ----
    auto* sweep_k = app.add_subcommand("sweep-k", "Accuracy vs number of PCA features");
    std::string sweepk_cache_path, sweepk_csv;
    TrainFlags sweepk_flags;
    std::vector<int> sweepk_values{10, 25, 50, 100, 200};
    sweep_k->add_option("--cache", sweepk_cache_path, "Input SCF1 cache")->required();
    sweep_k->add_option("--pca-k", sweepk_values, "K values to sweep");
    sweep_k->add_option("--csv", sweepk_csv, "Optional CSV output");
    add_train_flags(sweep_k, sweepk_flags);
    sweep_k->add_option("--seed", sweepk_flags.split_seed, "Split permutation seed");
    sweep_k->callback([&] {
        const FeatureCache cache = read_feature_cache(sweepk_cache_path);
        const ExperimentReport report =
            pca_sweep(cache, classifier_of(sweepk_flags), sweepk_values,
                      split_spec_of(sweepk_flags), fit_on_of(sweepk_flags),
                      sweepk_flags.c_penalty, sweepk_flags.tol);
        std::cout << format_report_table(report, "K");
        if (!sweepk_csv.empty()) write_report_csv(sweepk_csv, report);
    });

    // ---- sweep-train ----
    auto* sweep_train =
        app.add_subcommand("sweep-train", "Accuracy vs number of training samples");
    std::string sweept_cache_path, sweept_csv;
    TrainFlags sweept_flags;
    std::vector<int> sweept_values{2, 4, 6, 8};
    int sweept_seeds = 3;
    sweep_train->add_option("--cache", sweept_cache_path, "Input SCF1 cache")->required();
    sweep_train->add_option("--train-k", sweept_values, "k values to sweep");
    sweep_train->add_option("--seeds", sweept_seeds, "Number of random splits per k");
    sweep_train->add_option("--csv", sweept_csv, "Optional CSV output");
    add_train_flags(sweep_train, sweept_flags);
    sweep_train->add_option("--pca-k", sweept_flags.pca_k, "Number of PCA features");
    sweep_train->add_option("--seed", sweept_flags.split_seed, "Base seed for the splits");
    sweep_train->callback([&] {
        const FeatureCache cache = read_feature_cache(sweept_cache_path);
        const ExperimentReport report = train_count_sweep(
            cache, classifier_of(sweept_flags), sweept_values, sweept_flags.split_seed,
            sweept_seeds, sweept_flags.pca_k, fit_on_of(sweept_flags),
            sweept_flags.c_penalty, sweept_flags.tol);
        std::cout << format_report_table(report, "k");
        if (!sweept_csv.empty()) write_report_csv(sweept_csv, report);
    });

    // ---- bench ----
    auto* bench = app.add_subcommand("bench", "Per-image matching latency");
    SchemaFlags bench_schema;
    SourceFlags bench_src;
    TrainFlags bench_flags;
    int bench_images = 20;
    add_schema_flags(bench, bench_schema);
    add_source_flags(bench, bench_src);
    add_train_flags(bench, bench_flags);
    bench->add_option("--pca-k", bench_flags.pca_k, "Number of PCA features");
    bench->add_option("--images", bench_images, "Number of query images to time");
    bench->callback([&] {
        echo_effective("bench", bench_schema);
        bench_flags.split_seed = bench_src.seed;
        const FeatureSchema schema = bench_schema.schema();
        const LabeledDataset ds = load_source(bench_src, schema.image_size);
        const FilterBank bank = bench_schema.bank();
        const BenchReport r =
            bench_matching(ds, schema, bank, classifier_of(bench_flags), bench_flags.pca_k,
                           split_spec_of(bench_flags), bench_images, bench_flags.c_penalty,
                           bench_flags.tol);
        std::cout << "images=" << r.images << "\n"
                  << "extract mean=" << r.extract.mean_ms << "ms median="
                  << r.extract.median_ms << "ms\n"
                  << "project mean=" << r.project.mean_ms << "ms median="
                  << r.project.median_ms << "ms\n"
                  << "match   mean=" << r.match.mean_ms << "ms median=" << r.match.median_ms
                  << "ms\n"
                  << "total   mean=" << r.total.mean_ms << "ms median=" << r.total.median_ms
                  << "ms\n";
    });

    CLI11_PARSE(app, argc, argv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
