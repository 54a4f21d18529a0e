#include "palpation/acquisition.hpp"

#include <cmath>
#include <numbers>
#include <optional>

#include "palpation/errors.hpp"

namespace palpation::acquisition {

namespace {

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
double upper_tail(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// phi(t) - t Q(t) for t >= 0, i.e. the improvement left beyond a margin of t
// standard deviations. Written this way neither Phi(z) ~ 1 nor the
// z Phi(z) + phi(z) cancellation for negative z loses the small terms.
double excess(double t) { return std::max(0.0, normal_pdf(t) - t * upper_tail(t)); }

std::optional<std::size_t> max_variance_unvisited(const gp::Prediction& prediction,
                                                  const std::vector<bool>& visited) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < visited.size(); ++i) {
        if (visited[i])
            continue;
        if (!best || prediction.variance[i] > prediction.variance[*best])
            best = i;
    }
    return best;
}

}  // namespace

Incumbent incumbent_of(const gp::TrainingSet& training) {
    if (training.outputs.empty())
        throw InvalidInput("incumbent of an empty training set");
    Incumbent inc{training.outputs[0], training.inputs[0]};
    for (std::size_t i = 1; i < training.outputs.size(); ++i)
        if (training.outputs[i] > inc.best_value)
            inc = {training.outputs[i], training.inputs[i]};
    return inc;
}

void SamplingPolicy::validate() const {
    if (exploration_period < 1)
        throw InvalidInput("exploration_period must be >= 1");
    if (!(uncertainty_fraction > 0.0 && uncertainty_fraction <= 1.0))
        throw InvalidInput("uncertainty_fraction must be in (0, 1]");
}

double expected_improvement(double mu, double sigma, double best) {
    if (sigma < 0.0 || std::isnan(sigma))
        throw InvalidInput("expected_improvement: sigma must be >= 0");
    if (sigma == 0.0)
        return 0.0;
    const double gain = mu - best;
    const double z = gain / sigma;
    return z >= 0.0 ? gain + sigma * excess(z) : sigma * excess(-z);
}

std::vector<double> expected_improvement(const gp::Prediction& prediction, double best) {
    std::vector<double> ei(prediction.mean.size());
    for (std::size_t i = 0; i < ei.size(); ++i)
        ei[i] = expected_improvement(prediction.mean[i], std::sqrt(prediction.variance[i]), best);
    return ei;
}

std::size_t select_next(const gp::Prediction& prediction, std::span<const Vec2> grid,
                        const std::vector<bool>& visited, const Incumbent& incumbent,
                        int probe_count, const SamplingPolicy& policy, double sigma_f,
                        std::mt19937_64& rng) {
    policy.validate();
    if (grid.empty())
        throw InvalidInput("select_next: empty grid");
    if (prediction.mean.size() != grid.size() || prediction.variance.size() != grid.size() ||
        visited.size() != grid.size())
        throw InvalidInput("select_next: prediction, grid and visited mask must align");

    const auto fallback = max_variance_unvisited(prediction, visited);
    if (!fallback)
        throw ExplorationExhausted("every grid point has been probed");

    if (probe_count > 0 && probe_count % policy.exploration_period == 0) {
        const double threshold = policy.uncertainty_fraction * std::sqrt(sigma_f);
        std::vector<std::size_t> uncertain;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (!visited[i] && std::sqrt(prediction.variance[i]) >= threshold)
                uncertain.push_back(i);
        if (uncertain.empty())
            return *fallback;
        std::uniform_int_distribution<std::size_t> pick(0, uncertain.size() - 1);
        return uncertain[pick(rng)];
    }

    std::optional<std::size_t> best;
    double best_ei = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (visited[i])
            continue;
        const double ei = expected_improvement(prediction.mean[i], std::sqrt(prediction.variance[i]),
                                               incumbent.best_value);
        if (ei > best_ei) {
            best_ei = ei;
            best = i;
        }
    }
    return best ? *best : *fallback;
}

}  // namespace palpation::acquisition
