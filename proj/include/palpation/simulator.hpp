#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "palpation/cmu.hpp"
#include "palpation/geometry.hpp"
#include "palpation/mesh.hpp"

namespace palpation::sim {

struct StiffBump {
    Vec2 center = Vec2::Zero();  // model-frame x-y, mm
    double amplitude = 0.0;      // N/mm
    double radius = 1.0;         // mm
};

/// Gaussian-profile ridge following a polyline.
struct Artery {
    std::vector<Vec2> polyline;
    double half_width = 1.0;  // mm
    double amplitude = 0.0;   // N/mm
};

/// Synthetic organ: surface mesh in the model frame, a parametric stiffness
/// field over model-frame x-y, and the hidden tool -> model transform.
struct PhantomSpec {
    TriMesh mesh;
    double baseline_stiffness = 0.3;
    std::vector<StiffBump> bumps;
    std::optional<Artery> artery;
    RigidTransform true_transform;

    void validate() const;
};

struct NoiseSpec {
    double position_sigma = 0.3;  // mm, per axis
    double force_sigma = 0.1;     // N
    std::uint64_t rng_seed = 0;

    static NoiseSpec none() { return {0.0, 0.0, 0}; }
    void validate() const;
};

struct ProbeConfig {
    double radius = 9.0;             // mm
    double contact_force = 0.5;      // N
    double depth_increment = 0.3;    // mm
    double max_depth = 3.0;          // mm

    void validate() const;
    int steps() const;
};

/// Rectangle in tool-frame x-y plus the prediction grid spacing.
struct ROI {
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
    double spacing = 1.0;

    void validate() const;
};

double true_stiffness(const PhantomSpec& spec, const Vec2& surface_point);

/// Outcome of one virtual palpation.
struct ProbeEvent {
    Vec2 target = Vec2::Zero();             // tool frame
    Vec3 contact_model = Vec3::Zero();      // zero-force contact, model frame
    Vec3 normal_model = Vec3::UnitZ();
    double stiffness = 0.0;                 // ground truth at the contact
    std::vector<cmu::ProbeMeasurement> measurements;  // tool frame, sensed
};

/// Vertical (tool -z) approach at `target`, contact and normal taken from the
/// struck face, then `steps()` position-controlled indentations along the
/// inward normal with linear force F = c d. Throws OutOfWorkspace if the
/// approach ray misses the phantom.
ProbeEvent probe(const PhantomSpec& spec, const Vec2& target, const ProbeConfig& config,
                 const NoiseSpec& noise, std::mt19937_64& rng);

/// The four ROI corners followed by a 5 x 3 interior lattice, row-major.
std::vector<Vec2> initial_samples(const ROI& roi);

struct GridShape {
    std::size_t nx = 0;
    std::size_t ny = 0;
};

GridShape grid_shape(const ROI& roi);

/// Lattice at `roi.spacing` from (xmin, ymin), row-major (x varies fastest).
std::vector<Vec2> prediction_grid(const ROI& roi);

/// Ground-truth stiffness under each tool-frame grid point, found by casting
/// the probe approach ray through the true transform.
std::vector<double> ground_truth_on_tool_grid(const PhantomSpec& spec, std::span<const Vec2> grid);

/// Smooth organ-like height field z = h(x, y) over [-half_extent, half_extent]^2,
/// triangulated on a square lattice with outward (+z) normals.
TriMesh make_organ_mesh(double half_extent = 60.0, double step = 2.0);

/// Flat square patch at z = 0.
TriMesh make_flat_mesh(double half_extent, double step);

/// Loads a phantom document. Relative mesh paths resolve against the phantom
/// file's directory. Unknown keys are rejected with ConfigError.
PhantomSpec load_phantom(const std::filesystem::path& path);

}  // namespace palpation::sim
