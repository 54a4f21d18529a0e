#include "palpation/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "palpation/errors.hpp"

namespace palpation::gp {

void KernelParams::validate() const {
    if (!(sigma_f > 0.0) || !std::isfinite(sigma_f))
        throw InvalidInput("kernel sigma_f must be positive");
    if (!(length_scale > 0.0) || !std::isfinite(length_scale))
        throw InvalidInput("kernel length_scale must be positive");
    if (!(jitter >= 0.0) || !std::isfinite(jitter))
        throw InvalidInput("kernel jitter must be non-negative");
}

double kernel_eval(const KernelParams& params, const Vec2& xi, const Vec2& xj) {
    const double l2 = params.length_scale * params.length_scale;
    return params.sigma_f * std::exp(-(xi - xj).squaredNorm() / (2.0 * l2));
}

Eigen::MatrixXd covariance(const KernelParams& params, std::span<const Vec2> a,
                           std::span<const Vec2> b) {
    Eigen::MatrixXd k(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            k(i, j) = kernel_eval(params, a[i], b[j]);
    return k;
}

TrainingSet merge_duplicates(const TrainingSet& training, double tolerance) {
    if (training.inputs.size() != training.outputs.size())
        throw InvalidInput("training inputs and outputs differ in length");
    TrainingSet merged;
    std::vector<int> counts;
    for (std::size_t i = 0; i < training.inputs.size(); ++i) {
        const Vec2& x = training.inputs[i];
        auto it = std::find_if(merged.inputs.begin(), merged.inputs.end(),
                               [&](const Vec2& m) { return (m - x).norm() <= tolerance; });
        if (it == merged.inputs.end()) {
            merged.inputs.push_back(x);
            merged.outputs.push_back(training.outputs[i]);
            counts.push_back(1);
        } else {
            const auto k = static_cast<std::size_t>(it - merged.inputs.begin());
            merged.outputs[k] += training.outputs[i];
            ++counts[k];
        }
    }
    for (std::size_t k = 0; k < merged.outputs.size(); ++k)
        merged.outputs[k] /= counts[k];
    return merged;
}

GPModel GPModel::fit(const TrainingSet& training, const KernelParams& params,
                     std::optional<double> prior_mean) {
    params.validate();
    if (training.inputs.empty())
        throw InvalidInput("gp fit: empty training set");
    for (const Vec2& x : training.inputs)
        if (!x.allFinite())
            throw InvalidInput("gp fit: non-finite training input");
    for (double y : training.outputs)
        if (!std::isfinite(y))
            throw InvalidInput("gp fit: non-finite training output");

    GPModel model;
    model.training_ = merge_duplicates(training);
    model.params_ = params;
    const auto& ys = model.training_.outputs;
    const auto n = static_cast<Eigen::Index>(ys.size());
    model.offset_ = prior_mean.value_or(std::accumulate(ys.begin(), ys.end(), 0.0) / n);

    const Eigen::MatrixXd k = covariance(params, model.training_.inputs, model.training_.inputs);
    const double max_jitter = 1e-4 * params.sigma_f * (1.0 + 1e-12);
    double jitter = params.jitter;
    for (;;) {
        Eigen::LLT<Eigen::MatrixXd> llt(k + jitter * Eigen::MatrixXd::Identity(n, n));
        if (llt.info() == Eigen::Success) {
            model.jitter_ = jitter;
            model.factor_ = llt.matrixL();
            Eigen::VectorXd centered(n);
            for (Eigen::Index i = 0; i < n; ++i)
                centered(i) = ys[i] - model.offset_;
            model.alpha_ = llt.solve(centered);
            return model;
        }
        jitter = jitter > 0.0 ? jitter * 10.0 : 1e-8 * params.sigma_f;
        if (jitter > max_jitter)
            throw NumericalConditioning("gp fit: covariance not positive definite even with jitter " +
                                        std::to_string(1e-4 * params.sigma_f));
    }
}

Prediction GPModel::predict(std::span<const Vec2> queries) const {
    Prediction out;
    out.mean.resize(queries.size());
    out.variance.resize(queries.size());
    if (queries.empty())
        return out;

    // K* is m x n; solve L V = K*^T once for every query column.
    const Eigen::MatrixXd k_star = covariance(params_, queries, training_.inputs);
    const Eigen::MatrixXd v = factor_.triangularView<Eigen::Lower>().solve(k_star.transpose());
    const Eigen::VectorXd mean = k_star * alpha_;
    const double cap = params_.sigma_f + jitter_;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        const auto col = static_cast<Eigen::Index>(i);
        out.mean[i] = offset_ + mean(col);
        const double var = params_.sigma_f - v.col(col).squaredNorm();
        out.variance[i] = std::clamp(var, 0.0, cap);
    }
    return out;
}

}  // namespace palpation::gp
