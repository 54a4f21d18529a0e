#include "palpation/simulator.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "palpation/errors.hpp"
#include "palpation/io.hpp"

namespace palpation::sim {

namespace {

double distance_to_polyline(const Vec2& q, const std::vector<Vec2>& line) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        const Vec2 a = line[i];
        const Vec2 ab = line[i + 1] - a;
        const double len2 = ab.squaredNorm();
        const double t = len2 > 0.0 ? std::clamp((q - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
        best = std::min(best, (q - (a + t * ab)).norm());
    }
    return best;
}

constexpr double kApproachHeight = 1e4;  // mm above the tool-frame origin

}  // namespace

void PhantomSpec::validate() const {
    if (mesh.empty())
        throw InvalidInput("phantom mesh is empty");
    if (!(baseline_stiffness > 0.0))
        throw InvalidInput("phantom baseline stiffness must be positive");
    for (const StiffBump& b : bumps) {
        if (!(b.amplitude >= 0.0))
            throw InvalidInput("bump amplitude must be >= 0");
        if (!(b.radius > 0.0))
            throw InvalidInput("bump radius must be > 0");
    }
    if (artery) {
        if (artery->polyline.size() < 2)
            throw InvalidInput("artery polyline needs at least 2 points");
        if (!(artery->half_width > 0.0))
            throw InvalidInput("artery half_width must be > 0");
        if (!(artery->amplitude >= 0.0))
            throw InvalidInput("artery amplitude must be >= 0");
    }
}

void NoiseSpec::validate() const {
    if (!(position_sigma >= 0.0) || !(force_sigma >= 0.0))
        throw InvalidInput("noise sigmas must be >= 0");
}

void ProbeConfig::validate() const {
    if (!(radius > 0.0) || !(contact_force > 0.0) || !(depth_increment > 0.0) || !(max_depth > 0.0))
        throw InvalidInput("probe parameters must be positive");
    const double ratio = max_depth / depth_increment;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio) || std::round(ratio) < 1.0)
        throw InvalidInput("max_depth must be an integer multiple of depth_increment");
}

int ProbeConfig::steps() const { return static_cast<int>(std::lround(max_depth / depth_increment)); }

void ROI::validate() const {
    if (!(xmax > xmin) || !(ymax > ymin))
        throw InvalidInput("ROI bounds must satisfy xmax > xmin and ymax > ymin");
    if (!(spacing > 0.0))
        throw InvalidInput("ROI grid spacing must be positive");
}

double true_stiffness(const PhantomSpec& spec, const Vec2& q) {
    double c = spec.baseline_stiffness;
    for (const StiffBump& b : spec.bumps)
        c += b.amplitude * std::exp(-(q - b.center).squaredNorm() / (2.0 * b.radius * b.radius));
    if (spec.artery) {
        const Artery& a = *spec.artery;
        const double d = distance_to_polyline(q, a.polyline);
        if (d <= 3.0 * a.half_width)
            c += a.amplitude * std::exp(-d * d / (2.0 * a.half_width * a.half_width));
    }
    return c;
}

namespace {

std::optional<RayHit> approach(const PhantomSpec& spec, const Vec2& target) {
    const RigidTransform& t = spec.true_transform;
    return raycast(spec.mesh, t.apply(Vec3(target.x(), target.y(), kApproachHeight)),
                   t.rotate(-Vec3::UnitZ()));
}

}  // namespace

ProbeEvent probe(const PhantomSpec& spec, const Vec2& target, const ProbeConfig& config,
                 const NoiseSpec& noise, std::mt19937_64& rng) {
    config.validate();
    noise.validate();
    const auto hit = approach(spec, target);
    if (!hit)
        throw OutOfWorkspace("probe target (" + std::to_string(target.x()) + ", " +
                             std::to_string(target.y()) + ") does not reach the phantom surface");

    ProbeEvent ev;
    ev.target = target;
    ev.normal_model = hit->normal;
    // end effector rests one ball radius off the surface; the contact estimate
    // removes the same offset along the sensed normal
    const Vec3 end_effector = hit->point + hit->normal * config.radius;
    ev.contact_model = end_effector - hit->normal * config.radius;
    ev.stiffness = true_stiffness(spec, ev.contact_model.head<2>());

    const RigidTransform to_tool = spec.true_transform.inverse();
    const Vec3 sensed_normal = to_tool.rotate(ev.normal_model);
    std::normal_distribution<double> unit_normal(0.0, 1.0);
    const int steps = config.steps();
    ev.measurements.reserve(steps);
    for (int k = 1; k <= steps; ++k) {
        const double depth = k * config.depth_increment;
        cmu::ProbeMeasurement m;
        m.position = to_tool.apply(ev.contact_model - ev.normal_model * depth);
        if (noise.position_sigma > 0.0)
            for (int axis = 0; axis < 3; ++axis)
                m.position(axis) += noise.position_sigma * unit_normal(rng);
        m.force = ev.stiffness * depth;
        if (noise.force_sigma > 0.0)
            m.force = std::max(0.0, m.force + noise.force_sigma * unit_normal(rng));
        m.sensed_normal = sensed_normal;
        ev.measurements.push_back(m);
    }
    return ev;
}

std::vector<Vec2> initial_samples(const ROI& roi) {
    roi.validate();
    std::vector<Vec2> pts{{roi.xmin, roi.ymin}, {roi.xmax, roi.ymin}, {roi.xmin, roi.ymax}, {roi.xmax, roi.ymax}};
    const double w = roi.xmax - roi.xmin;
    const double h = roi.ymax - roi.ymin;
    for (int j = 1; j <= 3; ++j)
        for (int i = 1; i <= 5; ++i)
            pts.emplace_back(roi.xmin + w * i / 6.0, roi.ymin + h * j / 4.0);
    return pts;
}

GridShape grid_shape(const ROI& roi) {
    roi.validate();
    const auto count = [&](double extent) {
        return static_cast<std::size_t>(std::floor(extent / roi.spacing + 1e-9)) + 1;
    };
    return {count(roi.xmax - roi.xmin), count(roi.ymax - roi.ymin)};
}

std::vector<Vec2> prediction_grid(const ROI& roi) {
    const GridShape shape = grid_shape(roi);
    std::vector<Vec2> pts;
    pts.reserve(shape.nx * shape.ny);
    for (std::size_t j = 0; j < shape.ny; ++j)
        for (std::size_t i = 0; i < shape.nx; ++i)
            pts.emplace_back(std::min(roi.xmin + static_cast<double>(i) * roi.spacing, roi.xmax),
                             std::min(roi.ymin + static_cast<double>(j) * roi.spacing, roi.ymax));
    return pts;
}

std::vector<double> ground_truth_on_tool_grid(const PhantomSpec& spec, std::span<const Vec2> grid) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (const Vec2& g : grid) {
        const auto hit = approach(spec, g);
        if (!hit)
            throw OutOfWorkspace("grid point (" + std::to_string(g.x()) + ", " + std::to_string(g.y()) +
                                 ") lies outside the phantom");
        out.push_back(true_stiffness(spec, hit->point.head<2>()));
    }
    return out;
}

namespace {

double organ_height(double x, double y) {
    const auto gauss = [](double dx, double dy, double sx, double sy) {
        return std::exp(-(dx * dx / (2.0 * sx * sx) + dy * dy / (2.0 * sy * sy)));
    };
    return 18.0 * gauss(x, y, 45.0, 32.0) + 5.0 * gauss(x - 18.0, y - 12.0, 11.0, 11.0) -
           4.0 * gauss(x + 14.0, y + 16.0, 9.0, 9.0);
}

TriMesh make_height_field(double half_extent, double step, double (*height)(double, double)) {
    const int n = static_cast<int>(std::lround(2.0 * half_extent / step));
    if (n < 1)
        throw InvalidInput("height field needs at least one cell");
    std::vector<Vec3> vertices;
    vertices.reserve(static_cast<std::size_t>((n + 1) * (n + 1)));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            const double x = -half_extent + i * step;
            const double y = -half_extent + j * step;
            vertices.emplace_back(x, y, height(x, y));
        }
    std::vector<Face> faces;
    faces.reserve(static_cast<std::size_t>(2 * n * n));
    const auto id = [n](int i, int j) { return static_cast<std::uint32_t>(j * (n + 1) + i); };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            faces.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            faces.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return TriMesh(std::move(vertices), std::move(faces));
}

Vec2 read_vec2(const io::json& j, const char* what) {
    if (!j.is_array() || j.size() != 2)
        throw ConfigError(std::string(what) + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

TriMesh make_organ_mesh(double half_extent, double step) {
    return make_height_field(half_extent, step, organ_height);
}

TriMesh make_flat_mesh(double half_extent, double step) {
    return make_height_field(half_extent, step, [](double, double) { return 0.0; });
}

PhantomSpec load_phantom(const std::filesystem::path& path) {
    const io::json doc = io::read_json(path);
    PhantomSpec spec;
    try {
        io::require_known_keys(doc, {"mesh", "baseline_stiffness", "bumps", "artery", "true_transform",
                                     "bump_jitter"},
                               "phantom");
        const std::filesystem::path mesh_path = doc.at("mesh").get<std::string>();
        spec.mesh = load_mesh(mesh_path.is_absolute() ? mesh_path : path.parent_path() / mesh_path);
        spec.baseline_stiffness = doc.at("baseline_stiffness").get<double>();
        for (const auto& b : doc.value("bumps", io::json::array())) {
            io::require_known_keys(b, {"center", "amplitude", "radius"}, "phantom.bumps[]");
            spec.bumps.push_back({read_vec2(b.at("center"), "bump center"), b.at("amplitude").get<double>(),
                                  b.at("radius").get<double>()});
        }
        if (doc.contains("artery") && !doc["artery"].is_null()) {
            const auto& a = doc["artery"];
            io::require_known_keys(a, {"polyline", "half_width", "amplitude"}, "phantom.artery");
            Artery artery;
            for (const auto& p : a.at("polyline"))
                artery.polyline.push_back(read_vec2(p, "artery polyline point"));
            artery.half_width = a.at("half_width").get<double>();
            artery.amplitude = a.at("amplitude").get<double>();
            spec.artery = std::move(artery);
        }
        if (doc.contains("true_transform")) {
            const auto& t = doc["true_transform"];
            io::require_known_keys(t, {"translation_mm", "rotation_deg"}, "phantom.true_transform");
            const auto tr = t.at("translation_mm").get<std::vector<double>>();
            const auto rot = t.at("rotation_deg").get<std::vector<double>>();
            if (tr.size() != 3 || rot.size() != 3)
                throw ConfigError("phantom.true_transform: expected 3 translations and 3 angles");
            spec.true_transform = make_transform(tr[0], tr[1], tr[2], rot[0], rot[1], rot[2]);
        }
        // Perturbed variant: every bump centre moves `magnitude_mm` in a random direction.
        if (doc.contains("bump_jitter")) {
            const auto& jit = doc["bump_jitter"];
            io::require_known_keys(jit, {"magnitude_mm", "seed"}, "phantom.bump_jitter");
            const double mag = jit.at("magnitude_mm").get<double>();
            std::mt19937_64 rng(jit.at("seed").get<std::uint64_t>());
            std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
            for (StiffBump& b : spec.bumps) {
                const double a = angle(rng);
                b.center += mag * Vec2(std::cos(a), std::sin(a));
            }
        }
    } catch (const io::json::exception& e) {
        throw ConfigError("phantom " + path.string() + ": " + e.what());
    } catch (const InvalidInput& e) {
        throw ConfigError("phantom " + path.string() + ": " + e.what());
    }
    spec.validate();
    return spec;
}

}  // namespace palpation::sim
