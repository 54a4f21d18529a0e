#include "palpation/cmu.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "palpation/errors.hpp"

namespace palpation::cmu {

void CMUConfig::validate() const {
    if (!(tangent_distance_threshold > 0.0) || !(normal_angle_threshold > 0.0) ||
        !(min_force_difference > 0.0))
        throw InvalidInput("CMU thresholds must be positive");
    if (max_iterations < 1)
        throw InvalidInput("CMU max_iterations must be >= 1");
    if (!(convergence_tolerance > 0.0))
        throw InvalidInput("CMU convergence_tolerance must be positive");
    if (seed_transforms.empty())
        throw InvalidInput("CMU needs at least one seed transform");
}

std::vector<RigidTransform> default_seed_transforms(int count, double translation_range,
                                                    double rotation_range_deg,
                                                    std::uint64_t rng_seed) {
    std::vector<RigidTransform> seeds{RigidTransform::identity()};
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> trans(-translation_range, translation_range);
    std::uniform_real_distribution<double> rot(-rotation_range_deg, rotation_range_deg);
    for (int i = 0; i < count; ++i) {
        PoseParams p;
        p.tx = trans(rng);
        p.ty = trans(rng);
        p.tz = trans(rng);
        p.rx_deg = rot(rng);
        p.ry_deg = rot(rng);
        p.rz_deg = rot(rng);
        seeds.push_back(make_transform(p));
    }
    return seeds;
}

std::vector<CompatibleSet> collect_sets(std::span<const ProbeMeasurement> measurements,
                                        const CMUConfig& config) {
    config.validate();
    const double cos_limit = std::cos(config.normal_angle_threshold * std::numbers::pi / 180.0);

    std::vector<CompatibleSet> open;
    for (std::size_t k = 0; k < measurements.size(); ++k) {
        const ProbeMeasurement& m = measurements[k];
        bool placed = false;
        for (CompatibleSet& set : open) {
            const ProbeMeasurement& anchor = measurements[set.members.front()];
            const Vec3& n = anchor.sensed_normal;
            const Vec3 offset = m.position - anchor.position;
            const double tangent = (offset - offset.dot(n) * n).norm();
            if (tangent > config.tangent_distance_threshold)
                continue;
            if (m.sensed_normal.dot(n) < cos_limit)
                continue;
            const bool has_partner = std::any_of(set.members.begin(), set.members.end(), [&](std::size_t j) {
                return std::abs(measurements[j].force - m.force) >= config.min_force_difference;
            });
            if (!has_partner)
                continue;
            set.members.push_back(k);
            placed = true;
            break;
        }
        if (!placed)
            open.push_back(CompatibleSet{{k}, k, Vec2::Zero()});
    }

    std::vector<CompatibleSet> sets;
    for (CompatibleSet& set : open) {
        if (set.members.size() < 2)
            continue;
        // lowest force; arrival order breaks ties
        set.reference = *std::min_element(set.members.begin(), set.members.end(),
                                          [&](std::size_t a, std::size_t b) {
                                              return measurements[a].force < measurements[b].force;
                                          });
        set.location = measurements[set.reference].position.head<2>();
        sets.push_back(std::move(set));
    }
    return sets;
}

StiffnessSample estimate_stiffness(const CompatibleSet& set, std::size_t set_index,
                                   std::span<const ProbeMeasurement> measurements) {
    if (set.members.size() < 2)
        throw DegenerateSet("stiffness estimation needs at least two measurements");
    const Vec3& ref = measurements[set.reference].position;
    const auto n = static_cast<double>(set.members.size());

    double mean_d = 0.0;
    double mean_f = 0.0;
    std::vector<double> depth;
    depth.reserve(set.members.size());
    for (std::size_t j : set.members) {
        depth.push_back((measurements[j].position - ref).norm());
        mean_d += depth.back();
        mean_f += measurements[j].force;
    }
    mean_d /= n;
    mean_f /= n;

    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < set.members.size(); ++i) {
        const double dd = depth[i] - mean_d;
        sxx += dd * dd;
        sxy += dd * (measurements[set.members[i]].force - mean_f);
    }
    if (!(sxx > 0.0))
        throw DegenerateSet("compatible set has no depth span");

    StiffnessSample s;
    s.location = set.location;
    s.set_index = set_index;
    s.stiffness = sxy / sxx;
    if (!(s.stiffness > kStiffnessFloor) || !std::isfinite(s.stiffness)) {
        s.stiffness = kStiffnessFloor;
        s.degenerate = true;
    }
    return s;
}

std::vector<StiffnessSample> estimate_all(std::span<const CompatibleSet> sets,
                                          std::span<const ProbeMeasurement> measurements) {
    std::vector<StiffnessSample> out;
    out.reserve(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        try {
            out.push_back(estimate_stiffness(sets[i], i, measurements));
        } catch (const DegenerateSet&) {
        }
    }
    return out;
}

namespace {

struct Correspondences {
    std::vector<Vec3> targets;
    double objective = 0.0;
};

Correspondences correspond(const RigidTransform& t, std::span<const Vec3> sources,
                           std::span<const double> offsets, const MeshIndex& mesh) {
    Correspondences c;
    c.targets.reserve(sources.size());
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const Vec3 moved = t.apply(sources[i]);
        const ClosestPointResult hit = mesh.closest_point(moved);
        c.targets.push_back(hit.point - hit.normal * offsets[i]);
        c.objective += (c.targets.back() - moved).squaredNorm();
    }
    return c;
}

SeedOutcome run_seed(const RigidTransform& seed, std::span<const Vec3> sources,
                     std::span<const double> offsets, const MeshIndex& mesh, const CMUConfig& config) {
    SeedOutcome out{seed, seed, 0.0, 0.0, 0, {}};
    RigidTransform current = seed;
    Correspondences corr = correspond(current, sources, offsets, mesh);
    out.initial_objective = corr.objective;
    out.objective = corr.objective;

    for (int it = 1; it <= config.max_iterations; ++it) {
        out.trace.push_back({it - 1, corr.objective, current});
        const RigidTransform next = rigid_fit_svd(sources, corr.targets);
        double change = 0.0;
        for (const Vec3& b : sources)
            change = std::max(change, (next.apply(b) - current.apply(b)).norm());
        current = next;
        corr = correspond(current, sources, offsets, mesh);
        out.iterations = it;
        if (corr.objective < out.objective) {
            out.objective = corr.objective;
            out.result = current;
        }
        if (change < config.convergence_tolerance)
            break;
    }
    out.trace.push_back({out.iterations, corr.objective, current});
    return out;
}

}  // namespace

double registration_objective(const RigidTransform& transform, std::span<const Vec3> sources,
                              std::span<const double> depth_offsets, const MeshIndex& mesh) {
    if (sources.size() != depth_offsets.size())
        throw InvalidInput("registration_objective: sources and offsets differ in length");
    return correspond(transform, sources, depth_offsets, mesh).objective;
}

RegistrationResult cmu_register(std::span<const CompatibleSet> sets,
                                std::span<const StiffnessSample> stiffness, const MeshIndex& mesh,
                                std::span<const ProbeMeasurement> measurements,
                                const CMUConfig& config) {
    config.validate();
    std::vector<Vec3> sources;
    std::vector<double> offsets;
    for (const StiffnessSample& s : stiffness) {
        if (s.degenerate || !(s.stiffness > 0.0) || !std::isfinite(s.stiffness))
            continue;
        if (s.set_index >= sets.size())
            throw InvalidInput("stiffness sample refers to a missing compatible set");
        const ProbeMeasurement& ref = measurements[sets[s.set_index].reference];
        sources.push_back(ref.position);
        offsets.push_back(ref.force / s.stiffness);
    }
    if (sources.size() < 3)
        throw InsufficientData("registration needs at least 3 compatible sets with valid stiffness, have " +
                               std::to_string(sources.size()));

    RegistrationResult result;
    result.seeds.reserve(config.seed_transforms.size());
    for (const RigidTransform& seed : config.seed_transforms)
        result.seeds.push_back(run_seed(seed, sources, offsets, mesh, config));

    for (std::size_t i = 1; i < result.seeds.size(); ++i)
        if (result.seeds[i].objective < result.seeds[result.best_seed].objective)
            result.best_seed = i;
    const SeedOutcome& best = result.seeds[result.best_seed];
    result.transform = best.result;
    result.objective = best.objective;
    result.iterations = best.iterations;
    return result;
}

}  // namespace palpation::cmu
