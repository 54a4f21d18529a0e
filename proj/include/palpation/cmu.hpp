#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "palpation/geometry.hpp"
#include "palpation/mesh.hpp"

namespace palpation::cmu {

/// One force/position sample, tool frame.
struct ProbeMeasurement {
    Vec3 position = Vec3::Zero();       // mm
    double force = 0.0;                 // N
    Vec3 sensed_normal = Vec3::UnitZ(); // unit, points out of the surface
};

/// Measurements taken at effectively one surface location with differing
/// forces. `reference` is the lowest-force member.
struct CompatibleSet {
    std::vector<std::size_t> members;
    std::size_t reference = 0;
    Vec2 location = Vec2::Zero();  // tool-frame x-y of the reference member
};

struct StiffnessSample {
    Vec2 location = Vec2::Zero();
    double stiffness = 0.0;  // N/mm
    std::size_t set_index = 0;
    /// Fitted slope was not positive and has been clamped to the floor.
    bool degenerate = false;
};

struct CMUConfig {
    double tangent_distance_threshold = 1.0;  // mm
    double normal_angle_threshold = 10.0;     // deg
    double min_force_difference = 0.05;       // N
    int max_iterations = 50;
    double convergence_tolerance = 1e-3;  // mm
    std::vector<RigidTransform> seed_transforms{RigidTransform::identity()};

    void validate() const;
};

/// Identity followed by `count` random perturbations, translations uniform in
/// +-translation_range per axis and angles uniform in +-rotation_range_deg.
std::vector<RigidTransform> default_seed_transforms(int count = 10, double translation_range = 10.0,
                                                    double rotation_range_deg = 15.0,
                                                    std::uint64_t rng_seed = 0);

/// Greedy grouping in arrival order. A measurement joins the first existing set
/// where it lies within the tangent distance of the set's first member, its
/// normal is within the angle threshold of that member's normal, and its force
/// differs from at least one member by the minimum force difference. Sets with
/// fewer than two members are dropped.
std::vector<CompatibleSet> collect_sets(std::span<const ProbeMeasurement> measurements,
                                        const CMUConfig& config);

constexpr double kStiffnessFloor = 1e-6;

/// Least-squares slope of force against depth ||p_j - p_ref||. Throws
/// DegenerateSet when the depths do not span a range; a non-positive slope is
/// clamped to kStiffnessFloor and flagged.
StiffnessSample estimate_stiffness(const CompatibleSet& set, std::size_t set_index,
                                   std::span<const ProbeMeasurement> measurements);

/// Stiffness for every set, skipping sets whose depth span is degenerate.
std::vector<StiffnessSample> estimate_all(std::span<const CompatibleSet> sets,
                                          std::span<const ProbeMeasurement> measurements);

struct TraceEntry {
    int iteration = 0;
    double objective = 0.0;
    RigidTransform transform;
};

struct SeedOutcome {
    RigidTransform seed;
    RigidTransform result;
    double initial_objective = 0.0;
    double objective = 0.0;
    int iterations = 0;
    std::vector<TraceEntry> trace;
};

struct RegistrationResult {
    RigidTransform transform;  // tool frame -> model frame
    double objective = 0.0;    // sum of squared residuals at `transform`
    int iterations = 0;
    std::size_t best_seed = 0;
    std::vector<SeedOutcome> seeds;
};

/// Registration residual sum_i ||p_i^C - n_i^C F_i / c_i - T b_i||^2, with the
/// correspondences (p_i^C, n_i^C) taken as the mesh points closest to T b_i.
double registration_objective(const RigidTransform& transform, std::span<const Vec3> sources,
                              std::span<const double> depth_offsets, const MeshIndex& mesh);

/// Alternates closest-point correspondence and an SVD rigid fit from each seed
/// and keeps the seed with the lowest final objective. Only non-degenerate
/// stiffness samples take part. Each seed reports the lowest-objective iterate
/// it visited, so no seed ends worse than it started.
///
/// Throws InsufficientData with fewer than 3 usable sets.
RegistrationResult cmu_register(std::span<const CompatibleSet> sets,
                                std::span<const StiffnessSample> stiffness, const MeshIndex& mesh,
                                std::span<const ProbeMeasurement> measurements,
                                const CMUConfig& config);

}  // namespace palpation::cmu
