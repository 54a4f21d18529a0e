#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "palpation/geometry.hpp"

namespace palpation::gp {

/// Squared-exponential kernel sigma_f * exp(-d^2 / (2 l^2)) plus a diagonal
/// jitter on the training covariance.
struct KernelParams {
    double sigma_f = 1.0;
    double length_scale = 3.0;  // mm
    double jitter = 1e-8;

    void validate() const;
};

double kernel_eval(const KernelParams& params, const Vec2& xi, const Vec2& xj);

struct TrainingSet {
    std::vector<Vec2> inputs;     // mm, tool-frame x-y
    std::vector<double> outputs;  // stiffness, N/mm
};

/// Inputs closer than `tolerance` collapse onto the first occurrence with the
/// mean of their outputs. Order of first occurrences is preserved.
TrainingSet merge_duplicates(const TrainingSet& training, double tolerance = 1e-9);

struct Prediction {
    std::vector<double> mean;
    std::vector<double> variance;
};

/// Exact GP posterior with a fixed kernel. Immutable once fitted.
class GPModel {
public:
    /// Unfitted model: predicts the prior (zero mean, variance sigma_f).
    GPModel() = default;

    /// Outputs are centered on their mean (or on `prior_mean` when given) before
    /// conditioning; the offset is added back at prediction time. Duplicate
    /// inputs are merged first.
    ///
    /// On a failed Cholesky factorization the jitter is escalated x10 up to
    /// 1e-4 * sigma_f before giving up with NumericalConditioning.
    static GPModel fit(const TrainingSet& training, const KernelParams& params,
                       std::optional<double> prior_mean = std::nullopt);

    Prediction predict(std::span<const Vec2> queries) const;

    const TrainingSet& training() const { return training_; }
    const KernelParams& params() const { return params_; }
    double offset() const { return offset_; }
    /// Jitter actually used after escalation.
    double jitter() const { return jitter_; }
    /// Lower-triangular L with L L^T = K + jitter I.
    const Eigen::MatrixXd& factor() const { return factor_; }
    const Eigen::VectorXd& weights() const { return alpha_; }

private:
    TrainingSet training_;
    KernelParams params_;
    double offset_ = 0.0;
    double jitter_ = 0.0;
    Eigen::MatrixXd factor_;
    Eigen::VectorXd alpha_;  // (K + jitter I)^-1 (Y - offset)
};

Eigen::MatrixXd covariance(const KernelParams& params, std::span<const Vec2> a,
                           std::span<const Vec2> b);

}  // namespace palpation::gp
