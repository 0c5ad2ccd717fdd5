#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "palmscat/features.hpp"

namespace palmscat {

/// Fitted principal-component model: data mean, orthonormal axes ordered by
/// decreasing variance, and the variance captured along each axis.
struct PcaModel {
    std::vector<double> mean;
    std::vector<std::vector<double>> components;  // k_max rows of length dim()
    std::vector<double> eigenvalues;              // nonincreasing, >= 0

    int dim() const { return static_cast<int>(mean.size()); }
    int k_max() const { return static_cast<int>(components.size()); }
};

/// Fits PCA on M feature vectors via a thin SVD of the centered data matrix
/// (the explicit dim x dim covariance is never formed). Eigenvalues use the
/// 1/(M-1) convention; any positive rescaling of the covariance leaves the
/// components, and therefore all projections, unchanged. Components keep
/// k_max = min(dim, M-1) axes and are sign-fixed so the entry of largest
/// magnitude is positive.
inline PcaModel pca_fit(const std::vector<FeatureVector>& data) {
    const int m = static_cast<int>(data.size());
    if (m < 2) throw std::invalid_argument("pca_fit: need at least two vectors");
    const int d = static_cast<int>(data[0].size());
    for (const auto& v : data)
        if (static_cast<int>(v.size()) != d)
            throw std::invalid_argument("pca_fit: inconsistent vector dimensions");

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (const auto& v : data)
        for (int i = 0; i < d; ++i) model.mean[i] += v[i];
    for (double& x : model.mean) x /= m;

    Eigen::MatrixXd centered(m, d);
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < d; ++c) centered(r, c) = data[r][c] - model.mean[c];

    Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    const auto& singular = svd.singularValues();
    const auto& v = svd.matrixV();

    const int k_max = std::min(d, m - 1);
    model.components.resize(k_max);
    model.eigenvalues.resize(k_max);
    for (int k = 0; k < k_max; ++k) {
        double lambda = 0.0;
        if (k < singular.size()) {
            const double s = singular(k);
            lambda = s * s / (m - 1);
        }
        model.eigenvalues[k] = std::max(lambda, 0.0);

        std::vector<double> axis(d, 0.0);
        for (int i = 0; i < d; ++i) axis[i] = v(i, k);

        int peak = 0;
        for (int i = 1; i < d; ++i)
            if (std::abs(axis[i]) > std::abs(axis[peak])) peak = i;
        if (axis[peak] < 0.0)
            for (double& x : axis) x = -x;
        model.components[k] = std::move(axis);
    }
    return model;
}

/// Projects x onto the first K principal axes: (v_1 . (x - mean), ...).
inline std::vector<double> pca_project(const PcaModel& model, std::span<const double> x, int k) {
    if (k < 0 || k > model.k_max())
        throw std::invalid_argument("pca_project: K out of range");
    if (static_cast<int>(x.size()) != model.dim())
        throw std::invalid_argument("pca_project: dimension mismatch");
    std::vector<double> out(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        const auto& axis = model.components[j];
        double dot = 0.0;
        for (int i = 0; i < model.dim(); ++i) dot += axis[i] * (x[i] - model.mean[i]);
        out[j] = dot;
    }
    return out;
}

/// Fraction of total eigenvalue mass captured by the first K axes.
/// A fully degenerate (all-zero) spectrum is defined to retain 1.
inline double retained_variance(const PcaModel& model, int k) {
    if (k < 0 || k > model.k_max())
        throw std::invalid_argument("retained_variance: K out of range");
    double total = 0.0, head = 0.0;
    for (int j = 0; j < model.k_max(); ++j) {
        total += model.eigenvalues[j];
        if (j < k) head += model.eigenvalues[j];
    }
    if (total <= 0.0) return 1.0;
    return head / total;
}

}  // namespace palmscat
