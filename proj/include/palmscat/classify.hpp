#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace palmscat {

// ---------------------------------------------------------------------------
// Minimum-distance (nearest-neighbor) matching
// ---------------------------------------------------------------------------

struct GalleryTemplate {
    std::vector<double> vec;
    int label = 0;
    int sample_id = 0;
};

/// Enrolled templates matched under the Euclidean metric.
struct GalleryIndex {
    std::vector<GalleryTemplate> templates;

    int dim() const { return templates.empty() ? 0 : static_cast<int>(templates[0].vec.size()); }

    void add(std::vector<double> vec, int label, int sample_id) {
        if (!templates.empty() && vec.size() != templates[0].vec.size())
            throw std::invalid_argument("gallery: inconsistent template dimensions");
        templates.push_back({std::move(vec), label, sample_id});
    }
};

/// Builds a gallery assigning sample ids in enrollment order.
inline GalleryIndex make_gallery(const std::vector<std::vector<double>>& vectors,
                                 const std::vector<int>& labels) {
    if (vectors.size() != labels.size())
        throw std::invalid_argument("make_gallery: vectors/labels size mismatch");
    GalleryIndex g;
    for (std::size_t i = 0; i < vectors.size(); ++i)
        g.add(vectors[i], labels[i], static_cast<int>(i));
    return g;
}

struct NnResult {
    int label = 0;
    double distance = 0.0;
    int sample_id = 0;
};

/// Returns the label of the template with the minimum Euclidean distance to
/// the query; exact distance ties go to the lowest sample id.
inline NnResult nn_predict(const GalleryIndex& gallery, std::span<const double> query) {
    if (gallery.templates.empty()) throw std::invalid_argument("nn_predict: empty gallery");
    if (static_cast<int>(query.size()) != gallery.dim())
        throw std::invalid_argument("nn_predict: dimension mismatch");

    const GalleryTemplate* best = nullptr;
    double best_sq = 0.0;
    for (const auto& t : gallery.templates) {
        double sq = 0.0;
        for (std::size_t i = 0; i < query.size(); ++i) {
            const double d = query[i] - t.vec[i];
            sq += d * d;
        }
        if (!best || sq < best_sq || (sq == best_sq && t.sample_id < best->sample_id)) {
            best = &t;
            best_sq = sq;
        }
    }
    return {best->label, std::sqrt(best_sq), best->sample_id};
}

// ---------------------------------------------------------------------------
// Linear soft-margin SVM, one-vs-one multiclass
// ---------------------------------------------------------------------------

namespace svm_detail {

constexpr std::uint64_t kPermutationSeed = 0x1b2f5c3a9d4e7081ull;
constexpr int kMaxPasses = 10000;

struct BinarySolution {
    std::vector<double> w;      // dim K+1, bias folded in as the last coordinate
    std::vector<double> alpha;  // one dual variable per training point
    int passes = 0;
    bool converged = false;
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Dual coordinate ascent for the L1-loss soft-margin problem on inputs
/// augmented with a constant 1 coordinate (regularized bias). Runs random
/// permutation sweeps until the largest projected-gradient (KKT) violation
/// in a full pass drops to `tol`.
inline BinarySolution solve_dual(const std::vector<std::vector<double>>& pos,
                                 const std::vector<std::vector<double>>& neg, double c_penalty,
                                 double tol) {
    const std::size_t n = pos.size() + neg.size();
    const std::size_t dim = pos[0].size() + 1;

    std::vector<std::vector<double>> x;
    x.reserve(n);
    std::vector<double> y;
    y.reserve(n);
    for (const auto& v : pos) {
        if (v.size() + 1 != dim)
            throw std::invalid_argument("svm: inconsistent feature dimensions");
        x.push_back(v);
        x.back().push_back(1.0);
        y.push_back(1.0);
    }
    for (const auto& v : neg) {
        if (v.size() + 1 != dim)
            throw std::invalid_argument("svm: inconsistent feature dimensions");
        x.push_back(v);
        x.back().push_back(1.0);
        y.push_back(-1.0);
    }
    for (const auto& v : x)
        for (double e : v)
            if (!std::isfinite(e)) throw std::invalid_argument("svm: non-finite input");

    std::vector<double> q_diag(n);
    for (std::size_t i = 0; i < n; ++i) q_diag[i] = dot(x[i], x[i]);

    BinarySolution sol;
    sol.alpha.assign(n, 0.0);
    sol.w.assign(dim, 0.0);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(kPermutationSeed);

    for (int pass = 0; pass < kMaxPasses; ++pass) {
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t j = rng() % i;
            std::swap(order[i - 1], order[j]);
        }
        double max_violation = 0.0;
        for (std::size_t idx : order) {
            const double g = y[idx] * dot(sol.w, x[idx]) - 1.0;
            double pg = g;
            if (sol.alpha[idx] <= 0.0)
                pg = std::min(g, 0.0);
            else if (sol.alpha[idx] >= c_penalty)
                pg = std::max(g, 0.0);
            max_violation = std::max(max_violation, std::abs(pg));
            if (std::abs(pg) > 1e-14) {
                const double old = sol.alpha[idx];
                sol.alpha[idx] = std::clamp(old - g / q_diag[idx], 0.0, c_penalty);
                const double delta = (sol.alpha[idx] - old) * y[idx];
                if (delta != 0.0)
                    for (std::size_t k = 0; k < dim; ++k) sol.w[k] += delta * x[idx][k];
            }
        }
        sol.passes = pass + 1;
        if (max_violation <= tol) {
            sol.converged = true;
            break;
        }
    }

    // Recompute w from the duals to shed incremental-update drift.
    sol.w.assign(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (sol.alpha[i] == 0.0) continue;
        const double a = sol.alpha[i] * y[i];
        for (std::size_t k = 0; k < dim; ++k) sol.w[k] += a * x[i][k];
    }
    return sol;
}

inline double dual_objective(const BinarySolution& sol) {
    double sum_alpha = 0.0;
    for (double a : sol.alpha) sum_alpha += a;
    return sum_alpha - 0.5 * dot(sol.w, sol.w);
}

inline double primal_objective(const BinarySolution& sol,
                               const std::vector<std::vector<double>>& pos,
                               const std::vector<std::vector<double>>& neg, double c_penalty) {
    double hinge = 0.0;
    auto margin = [&](const std::vector<double>& v, double y) {
        double s = sol.w.back();  // constant coordinate
        for (std::size_t i = 0; i < v.size(); ++i) s += sol.w[i] * v[i];
        return y * s;
    };
    for (const auto& v : pos) hinge += std::max(0.0, 1.0 - margin(v, 1.0));
    for (const auto& v : neg) hinge += std::max(0.0, 1.0 - margin(v, -1.0));
    return 0.5 * dot(sol.w, sol.w) + c_penalty * hinge;
}

// Orientation canonicalization: solving (pos, neg) and (neg, pos) must give
// exactly negated weights, so the dual is always run in one canonical
// orientation and the result flipped if needed.
inline bool swapped_is_canonical(const std::vector<std::vector<double>>& pos,
                                 const std::vector<std::vector<double>>& neg) {
    if (pos.size() != neg.size()) return pos.size() > neg.size();
    return std::lexicographical_compare(pos.begin(), pos.end(), neg.begin(), neg.end());
}

}  // namespace svm_detail

/// Trains one binary soft-margin classifier; the returned weight vector has
/// dimension K+1 with the bias folded in as the last coordinate. Swapping
/// the two argument roles negates the result exactly.
inline std::vector<double> svm_train_binary(const std::vector<std::vector<double>>& pos,
                                            const std::vector<std::vector<double>>& neg,
                                            double c_penalty, double tol) {
    if (pos.empty() || neg.empty())
        throw std::invalid_argument("svm_train_binary: both classes need samples");
    if (!(c_penalty > 0.0)) throw std::invalid_argument("svm_train_binary: C must be positive");
    if (!(tol > 0.0)) throw std::invalid_argument("svm_train_binary: tol must be positive");

    if (svm_detail::swapped_is_canonical(pos, neg)) {
        auto w = svm_detail::solve_dual(neg, pos, c_penalty, tol).w;
        for (double& v : w) v = -v;
        return w;
    }
    return svm_detail::solve_dual(pos, neg, c_penalty, tol).w;
}

struct PairClassifier {
    int class_a = 0;
    int class_b = 0;
    std::vector<double> w;  // dim K+1; positive decision value votes class_a
};

/// One-vs-one multiclass model: C(M,2) pairwise linear decision functions.
struct SvmModel {
    std::vector<PairClassifier> pairs;
    std::vector<int> classes;  // ascending
    double c_penalty = 1.0;
    double tol = 1e-4;

    int dim() const { return pairs.empty() ? 0 : static_cast<int>(pairs[0].w.size()) - 1; }
};

/// Trains the full one-vs-one model from labeled vectors.
inline SvmModel svm_train(const std::vector<std::vector<double>>& vectors,
                          const std::vector<int>& labels, double c_penalty = 1.0,
                          double tol = 1e-4) {
    if (vectors.size() != labels.size())
        throw std::invalid_argument("svm_train: vectors/labels size mismatch");
    if (vectors.empty()) throw std::invalid_argument("svm_train: no training data");

    SvmModel model;
    model.c_penalty = c_penalty;
    model.tol = tol;
    model.classes = labels;
    std::sort(model.classes.begin(), model.classes.end());
    model.classes.erase(std::unique(model.classes.begin(), model.classes.end()),
                        model.classes.end());
    if (model.classes.size() < 2)
        throw std::invalid_argument("svm_train: need at least two classes");

    auto class_vectors = [&](int cls) {
        std::vector<std::vector<double>> out;
        for (std::size_t i = 0; i < vectors.size(); ++i)
            if (labels[i] == cls) out.push_back(vectors[i]);
        return out;
    };

    for (std::size_t a = 0; a < model.classes.size(); ++a) {
        const auto pos = class_vectors(model.classes[a]);
        for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
            model.pairs.push_back({model.classes[a], model.classes[b],
                                   svm_train_binary(pos, class_vectors(model.classes[b]),
                                                    c_penalty, tol)});
        }
    }
    return model;
}

struct SvmPrediction {
    int label = 0;
    std::vector<int> votes;        // aligned with model.classes
    std::vector<double> margins;   // decision value per pair, model order
};

/// One-vs-one voting: each pair votes through the sign of its decision value
/// (zero counts for the lower class id). The most-voted class wins; vote
/// ties are broken by the larger sum of winning decision magnitudes, then by
/// the lowest class id.
inline SvmPrediction svm_predict(const SvmModel& model, std::span<const double> query) {
    if (model.pairs.empty()) throw std::invalid_argument("svm_predict: empty model");
    if (static_cast<int>(query.size()) != model.dim())
        throw std::invalid_argument("svm_predict: dimension mismatch");

    SvmPrediction out;
    out.votes.assign(model.classes.size(), 0);
    out.margins.reserve(model.pairs.size());
    std::vector<double> win_mass(model.classes.size(), 0.0);

    auto class_slot = [&](int cls) {
        return static_cast<std::size_t>(
            std::lower_bound(model.classes.begin(), model.classes.end(), cls) -
            model.classes.begin());
    };

    for (const auto& pair : model.pairs) {
        double decision = pair.w.back();
        for (std::size_t i = 0; i < query.size(); ++i) decision += pair.w[i] * query[i];
        out.margins.push_back(decision);
        const int winner = decision >= 0.0 ? pair.class_a : pair.class_b;
        const std::size_t slot = class_slot(winner);
        out.votes[slot] += 1;
        win_mass[slot] += std::abs(decision);
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < model.classes.size(); ++i) {
        if (out.votes[i] > out.votes[best] ||
            (out.votes[i] == out.votes[best] && win_mass[i] > win_mass[best]))
            best = i;
    }
    out.label = model.classes[best];
    return out;
}

}  // namespace palmscat
