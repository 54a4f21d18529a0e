#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "palpation/geometry.hpp"
#include "palpation/gp.hpp"

namespace palpation::acquisition {

/// Best output seen so far and where it was observed.
struct Incumbent {
    double best_value = 0.0;
    Vec2 best_location = Vec2::Zero();
};

/// Incumbent over a training set (first occurrence wins ties).
Incumbent incumbent_of(const gp::TrainingSet& training);

/// EI interleaved with a random draw among high-uncertainty points every
/// `exploration_period` selections.
struct SamplingPolicy {
    int exploration_period = 5;
    double uncertainty_fraction = 0.9;
    std::uint64_t rng_seed = 0;

    void validate() const;
};

/// (mu - best) Phi(z) + sigma phi(z), z = (mu - best) / sigma; zero when sigma == 0.
/// Throws InvalidInput for negative sigma.
double expected_improvement(double mu, double sigma, double best);

std::vector<double> expected_improvement(const gp::Prediction& prediction, double best);

/// Index of the next grid point to probe.
///
/// `probe_count` counts guided selections made so far. When it is a positive
/// multiple of the exploration period, a uniformly random unvisited point whose
/// predictive standard deviation is at least uncertainty_fraction * sqrt(sigma_f)
/// is returned (falling back to the unvisited point of largest variance).
/// Otherwise the unvisited EI maximiser is returned, lowest index on ties; when
/// every EI is zero the largest-variance unvisited point is used instead.
///
/// Throws ExplorationExhausted when every grid point is visited.
std::size_t select_next(const gp::Prediction& prediction, std::span<const Vec2> grid,
                        const std::vector<bool>& visited, const Incumbent& incumbent,
                        int probe_count, const SamplingPolicy& policy, double sigma_f,
                        std::mt19937_64& rng);

}  // namespace palpation::acquisition
