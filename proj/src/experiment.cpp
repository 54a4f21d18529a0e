#include "palpation/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "palpation/errors.hpp"
#include "palpation/io.hpp"

namespace palpation::experiment {

using io::json;

std::string to_string(Strategy s) { return s == Strategy::ei ? "ei" : "uniform"; }

void ExperimentConfig::validate() const {
    try {
        roi.validate();
        probe.validate();
        noise.validate();
        kernel.validate();
        policy.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    if (budget < 0)
        throw ConfigError("budget must be >= 0");
    const RegistrationSettings& r = registration;
    if (!(r.tangent_distance_threshold > 0.0) || !(r.normal_angle_threshold > 0.0) ||
        !(r.min_force_difference > 0.0) || !(r.convergence_tolerance > 0.0))
        throw ConfigError("registration thresholds must be positive");
    if (r.max_iterations < 1 || r.random_seeds < 0 || r.interval < 0)
        throw ConfigError("registration iteration/seed/interval counts out of range");
    if (!(r.seed_translation_range >= 0.0) || !(r.seed_rotation_range >= 0.0))
        throw ConfigError("registration seed ranges must be >= 0");
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    // splitmix64 over (master, stream)
    std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

enum Stream : std::uint64_t { kNoiseStream = 1, kPolicyStream = 2, kSeedStream = 3 };

template <typename T>
void read_opt(const json& obj, const char* key, T& out) {
    if (obj.contains(key))
        out = obj.at(key).get<T>();
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    try {
        io::require_known_keys(doc, {"phantom", "roi", "probe", "noise", "kernel", "policy", "budget",
                                     "registration", "strategy", "output_dir", "seed"},
                               "config");
        c.phantom_path = doc.at("phantom").get<std::string>();
        if (c.phantom_path.is_relative())
            c.phantom_path = base_dir / c.phantom_path;
        read_opt(doc, "seed", c.seed);
        read_opt(doc, "budget", c.budget);
        if (doc.contains("output_dir"))
            c.output_dir = doc.at("output_dir").get<std::string>();

        if (doc.contains("roi")) {
            const json& r = doc["roi"];
            io::require_known_keys(r, {"xmin", "xmax", "ymin", "ymax", "spacing"}, "config.roi");
            read_opt(r, "xmin", c.roi.xmin);
            read_opt(r, "xmax", c.roi.xmax);
            read_opt(r, "ymin", c.roi.ymin);
            read_opt(r, "ymax", c.roi.ymax);
            read_opt(r, "spacing", c.roi.spacing);
        }
        if (doc.contains("probe")) {
            const json& p = doc["probe"];
            io::require_known_keys(p, {"radius", "contact_force", "depth_increment", "max_depth"},
                                   "config.probe");
            read_opt(p, "radius", c.probe.radius);
            read_opt(p, "contact_force", c.probe.contact_force);
            read_opt(p, "depth_increment", c.probe.depth_increment);
            read_opt(p, "max_depth", c.probe.max_depth);
        }
        c.noise.rng_seed = derive_seed(c.seed, kNoiseStream);
        if (doc.contains("noise") && !doc["noise"].is_null()) {
            const json& n = doc["noise"];
            io::require_known_keys(n, {"position_sigma", "force_sigma", "rng_seed"}, "config.noise");
            read_opt(n, "position_sigma", c.noise.position_sigma);
            read_opt(n, "force_sigma", c.noise.force_sigma);
            read_opt(n, "rng_seed", c.noise.rng_seed);
        }
        if (doc.contains("kernel")) {
            const json& k = doc["kernel"];
            io::require_known_keys(k, {"sigma_f", "length_scale", "jitter"}, "config.kernel");
            read_opt(k, "sigma_f", c.kernel.sigma_f);
            read_opt(k, "length_scale", c.kernel.length_scale);
            read_opt(k, "jitter", c.kernel.jitter);
        }
        c.policy.rng_seed = derive_seed(c.seed, kPolicyStream);
        if (doc.contains("policy")) {
            const json& p = doc["policy"];
            io::require_known_keys(p, {"exploration_period", "uncertainty_fraction", "rng_seed"},
                                   "config.policy");
            read_opt(p, "exploration_period", c.policy.exploration_period);
            read_opt(p, "uncertainty_fraction", c.policy.uncertainty_fraction);
            read_opt(p, "rng_seed", c.policy.rng_seed);
        }
        if (doc.contains("registration")) {
            const json& r = doc["registration"];
            io::require_known_keys(r, {"tangent_distance_threshold", "normal_angle_threshold",
                                       "min_force_difference", "max_iterations", "convergence_tolerance",
                                       "random_seeds", "seed_translation_range", "seed_rotation_range",
                                       "interval"},
                                   "config.registration");
            RegistrationSettings& s = c.registration;
            read_opt(r, "tangent_distance_threshold", s.tangent_distance_threshold);
            read_opt(r, "normal_angle_threshold", s.normal_angle_threshold);
            read_opt(r, "min_force_difference", s.min_force_difference);
            read_opt(r, "max_iterations", s.max_iterations);
            read_opt(r, "convergence_tolerance", s.convergence_tolerance);
            read_opt(r, "random_seeds", s.random_seeds);
            read_opt(r, "seed_translation_range", s.seed_translation_range);
            read_opt(r, "seed_rotation_range", s.seed_rotation_range);
            read_opt(r, "interval", s.interval);
        }
        if (doc.contains("strategy")) {
            const auto s = doc.at("strategy").get<std::string>();
            if (s == "ei")
                c.strategy = Strategy::ei;
            else if (s == "uniform")
                c.strategy = Strategy::uniform;
            else
                throw ConfigError("config.strategy must be \"ei\" or \"uniform\", got \"" + s + "\"");
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    return parse_config(io::read_json(path), path.parent_path());
}

cmu::CMUConfig make_cmu_config(const ExperimentConfig& config) {
    const RegistrationSettings& r = config.registration;
    cmu::CMUConfig c;
    c.tangent_distance_threshold = r.tangent_distance_threshold;
    c.normal_angle_threshold = r.normal_angle_threshold;
    c.min_force_difference = r.min_force_difference;
    c.max_iterations = r.max_iterations;
    c.convergence_tolerance = r.convergence_tolerance;
    c.seed_transforms = cmu::default_seed_transforms(r.random_seeds, r.seed_translation_range,
                                                     r.seed_rotation_range,
                                                     derive_seed(config.seed, kSeedStream));
    return c;
}

std::vector<Vec2> uniform_lattice(const sim::ROI& roi, int count) {
    roi.validate();
    if (count <= 0)
        return {};
    const double w = roi.xmax - roi.xmin;
    const double h = roi.ymax - roi.ymin;
    const int nx = std::max(1, static_cast<int>(std::lround(std::sqrt(count * w / h))));
    const int ny = (count + nx - 1) / nx;
    const auto axis = [](double lo, double hi, int n, int i) {
        return n == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * i / (n - 1);
    };
    std::vector<Vec2> full;
    full.reserve(static_cast<std::size_t>(nx * ny));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            full.emplace_back(axis(roi.xmin, roi.xmax, nx, i), axis(roi.ymin, roi.ymax, ny, j));
    if (static_cast<int>(full.size()) == count)
        return full;
    std::vector<Vec2> thinned;
    thinned.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k)
        thinned.push_back(full[static_cast<std::size_t>(k) * full.size() / static_cast<std::size_t>(count)]);
    return thinned;
}

MapMetrics map_metrics(std::span<const double> estimate, std::span<const double> truth) {
    if (estimate.size() != truth.size() || estimate.empty())
        throw InvalidInput("map_metrics: maps must be non-empty and of equal size");
    const auto n = static_cast<double>(truth.size());
    MapMetrics m;
    double se = 0.0;
    double me = 0.0;
    double mt = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        se += (estimate[i] - truth[i]) * (estimate[i] - truth[i]);
        me += estimate[i];
        mt += truth[i];
    }
    m.rmse = std::sqrt(se / n);
    me /= n;
    mt /= n;
    double cov = 0.0;
    double ve = 0.0;
    double vt = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        cov += (estimate[i] - me) * (truth[i] - mt);
        ve += (estimate[i] - me) * (estimate[i] - me);
        vt += (truth[i] - mt) * (truth[i] - mt);
    }
    m.correlation = ve > 0.0 && vt > 0.0 ? std::clamp(cov / std::sqrt(ve * vt), -1.0, 1.0) : 0.0;

    // nearest-rank 90th percentile
    std::vector<double> sorted(truth.begin(), truth.end());
    std::sort(sorted.begin(), sorted.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.9 * n));
    const double cut = sorted[std::max<std::size_t>(rank, 1) - 1];
    double top_se = 0.0;
    std::size_t top_n = 0;
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (truth[i] >= cut) {
            top_se += (estimate[i] - truth[i]) * (estimate[i] - truth[i]);
            ++top_n;
        }
    m.top_decile_rmse = std::sqrt(top_se / static_cast<double>(top_n));
    return m;
}

std::vector<Vec3> rms_points(std::span<const cmu::ProbeMeasurement> measurements) {
    std::vector<Vec3> pts;
    pts.reserve(measurements.size());
    for (const auto& m : measurements)
        pts.push_back(m.position);
    return pts;
}

namespace {

double wrap_degrees(double d) {
    d = std::fmod(d + 180.0, 360.0);
    if (d < 0.0)
        d += 360.0;
    return d - 180.0;
}

struct LoopState {
    const ExperimentConfig& config;
    const sim::PhantomSpec& phantom;
    const MeshIndex& mesh_index;
    cmu::CMUConfig cmu_config;
    ExperimentResult& result;
    std::mt19937_64 noise_rng;
    std::vector<bool> visited;
    bool registered = false;

    void probe_at(const Vec2& target) {
        sim::ProbeEvent ev = sim::probe(phantom, target, config.probe, config.noise, noise_rng);
        result.measurements.insert(result.measurements.end(), ev.measurements.begin(), ev.measurements.end());
        result.probes.push_back(std::move(ev));
    }

    void mark_visited(const Vec2& target) {
        for (std::size_t i = 0; i < result.grid.size(); ++i)
            if ((result.grid[i] - target).norm() <= 1e-9)
                visited[i] = true;
    }

    /// Stiffness sets, optional registration, GP fit and grid prediction.
    void update(bool register_now) {
        result.sets = cmu::collect_sets(result.measurements, cmu_config);
        result.stiffness = cmu::estimate_all(result.sets, result.measurements);
        if (register_now) {
            // the previous estimate joins the seeds so that iterations carry
            // over between cycles
            cmu::CMUConfig c = cmu_config;
            if (registered)
                c.seed_transforms.push_back(result.registration.transform);
            result.registration = cmu::cmu_register(result.sets, result.stiffness, mesh_index, result.measurements, c);
            registered = true;
        }

        gp::TrainingSet training;
        for (const cmu::StiffnessSample& s : result.stiffness) {
            if (s.degenerate)
                continue;
            training.inputs.push_back(s.location);
            training.outputs.push_back(s.stiffness);
        }
        if (training.inputs.empty())
            throw InsufficientData("no usable stiffness estimates to fit the stiffness map");
        result.model = gp::GPModel::fit(training, config.kernel);
        result.prediction = result.model.predict(result.grid);
    }
};

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const sim::PhantomSpec& phantom) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    phantom.validate();

    ExperimentResult result;
    result.config = config;
    result.grid = sim::prediction_grid(config.roi);
    result.ground_truth = sim::ground_truth_on_tool_grid(phantom, result.grid);

    const MeshIndex mesh_index(phantom.mesh);
    LoopState state{config, phantom, mesh_index, make_cmu_config(config), result,
                    std::mt19937_64(config.noise.rng_seed), std::vector<bool>(result.grid.size(), false)};

    for (const Vec2& target : sim::initial_samples(config.roi)) {
        state.probe_at(target);
        state.mark_visited(target);
    }

    const int interval = config.registration.interval;
    if (config.strategy == Strategy::ei) {
        std::mt19937_64 policy_rng(config.policy.rng_seed);
        for (int step = 0; step < config.budget; ++step) {
            state.update(interval > 0 && step % interval == 0);
            const auto incumbent = acquisition::incumbent_of(result.model.training());
            std::size_t next = 0;
            try {
                next = acquisition::select_next(result.prediction, result.grid, state.visited, incumbent, step,
                                                config.policy, config.kernel.sigma_f, policy_rng);
            } catch (const ExplorationExhausted&) {
                break;
            }
            state.probe_at(result.grid[next]);
            state.visited[next] = true;
        }
    } else {
        for (const Vec2& target : uniform_lattice(config.roi, config.budget)) {
            state.probe_at(target);
            state.mark_visited(target);
        }
    }
    state.update(true);

    const auto incumbent = acquisition::incumbent_of(result.model.training());
    result.expected_improvement = acquisition::expected_improvement(result.prediction, incumbent.best_value);

    ExperimentReport& rep = result.report;
    rep.true_transform = phantom.true_transform;
    rep.estimated_transform = result.registration.transform;
    const PoseParams t = rep.true_transform.params();
    const PoseParams e = rep.estimated_transform.params();
    rep.translation_rotation_error = {std::abs(e.tx - t.tx),
                                      std::abs(e.ty - t.ty),
                                      std::abs(e.tz - t.tz),
                                      std::abs(wrap_degrees(e.rx_deg - t.rx_deg)),
                                      std::abs(wrap_degrees(e.ry_deg - t.ry_deg)),
                                      std::abs(wrap_degrees(e.rz_deg - t.rz_deg))};
    rep.rms_mm = rms_error(rep.estimated_transform, rep.true_transform, rms_points(result.measurements));
    rep.probe_count = static_cast<int>(result.probes.size());
    rep.objective = result.registration.objective;
    rep.registration_iterations = result.registration.iterations;
    rep.compatible_sets = result.sets.size();
    rep.map = map_metrics(result.prediction.mean, result.ground_truth);
    rep.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    return run_experiment(config, sim::load_phantom(config.phantom_path));
}

json report_to_json(const ExperimentReport& r, Strategy strategy) {
    const PoseParams& err = r.translation_rotation_error;
    return json{
        {"strategy", to_string(strategy)},
        {"true_transform", io::transform_to_json(r.true_transform)},
        {"estimated_transform", io::transform_to_json(r.estimated_transform)},
        {"translation_error_mm", {err.tx, err.ty, err.tz}},
        {"rotation_error_deg", {err.rx_deg, err.ry_deg, err.rz_deg}},
        {"rms_mm", r.rms_mm},
        {"probe_count", r.probe_count},
        {"objective", r.objective},
        {"registration_iterations", r.registration_iterations},
        {"compatible_sets", r.compatible_sets},
        {"map_rmse", r.map.rmse},
        {"map_correlation", r.map.correlation},
        {"top_decile_rmse", r.map.top_decile_rmse},
    };
}

std::string stiffness_map_csv(const ExperimentResult& r) {
    std::ostringstream out;
    out << "x_mm,y_mm,mean,std,ei\n";
    for (std::size_t i = 0; i < r.grid.size(); ++i)
        out << io::format_double(r.grid[i].x()) << ',' << io::format_double(r.grid[i].y()) << ','
            << io::format_double(r.prediction.mean[i]) << ','
            << io::format_double(std::sqrt(r.prediction.variance[i])) << ','
            << io::format_double(r.expected_improvement[i]) << '\n';
    return out.str();
}

std::string probe_log_csv(const ExperimentResult& r) {
    // measurement index -> stiffness of the set it belongs to
    std::vector<double> set_stiffness(r.measurements.size(), std::nan(""));
    for (const cmu::StiffnessSample& s : r.stiffness)
        for (std::size_t j : r.sets[s.set_index].members)
            set_stiffness[j] = s.stiffness;

    std::ostringstream out;
    out << "probe,target_x_mm,target_y_mm,sample,px_mm,py_mm,pz_mm,depth_mm,force_n,stiffness_n_per_mm\n";
    std::size_t m = 0;
    for (std::size_t p = 0; p < r.probes.size(); ++p) {
        const sim::ProbeEvent& ev = r.probes[p];
        const std::size_t first = m;
        for (std::size_t k = 0; k < ev.measurements.size(); ++k, ++m) {
            const cmu::ProbeMeasurement& meas = ev.measurements[k];
            out << p << ',' << io::format_double(ev.target.x()) << ',' << io::format_double(ev.target.y()) << ','
                << k << ',' << io::format_double(meas.position.x()) << ','
                << io::format_double(meas.position.y()) << ',' << io::format_double(meas.position.z()) << ','
                << io::format_double(static_cast<double>(k + 1) * r.config.probe.depth_increment) << ','
                << io::format_double(meas.force) << ',';
            const double c = set_stiffness[first];
            if (!std::isnan(c))
                out << io::format_double(c);
            out << '\n';
        }
    }
    return out.str();
}

std::string registration_trace_csv(const ExperimentResult& r) {
    std::ostringstream out;
    out << "iteration,objective,tx_mm,ty_mm,tz_mm,rx_deg,ry_deg,rz_deg\n";
    if (r.registration.seeds.empty())
        return out.str();
    for (const cmu::TraceEntry& e : r.registration.seeds[r.registration.best_seed].trace) {
        const PoseParams p = e.transform.params();
        out << e.iteration << ',' << io::format_double(e.objective) << ',' << io::format_double(p.tx) << ','
            << io::format_double(p.ty) << ',' << io::format_double(p.tz) << ',' << io::format_double(p.rx_deg)
            << ',' << io::format_double(p.ry_deg) << ',' << io::format_double(p.rz_deg) << '\n';
    }
    return out.str();
}

std::string registered_probes_csv(const ExperimentResult& r) {
    std::ostringstream out;
    out << "set,x_mm,y_mm,z_mm,stiffness_n_per_mm\n";
    for (const cmu::StiffnessSample& s : r.stiffness) {
        const Vec3 p = r.registration.transform.apply(r.measurements[r.sets[s.set_index].reference].position);
        out << s.set_index << ',' << io::format_double(p.x()) << ',' << io::format_double(p.y()) << ','
            << io::format_double(p.z()) << ',' << io::format_double(s.stiffness) << '\n';
    }
    return out.str();
}

void write_outputs(const ExperimentResult& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    io::write_text(dir / "report.json", report_to_json(r.report, r.config.strategy).dump(2) + "\n");
    io::write_text(dir / "stiffness_map.csv", stiffness_map_csv(r));
    io::write_text(dir / "probe_log.csv", probe_log_csv(r));
    io::write_text(dir / "registration_trace.csv", registration_trace_csv(r));
    io::write_text(dir / "registered_probes.csv", registered_probes_csv(r));
    const sim::GridShape shape = sim::grid_shape(r.config.roi);
    io::write_text(dir / "heatmap.pgm", io::encode_pgm(r.prediction.mean, shape.nx, shape.ny));
}

Comparison compare_strategies(const ExperimentConfig& config, const sim::PhantomSpec& phantom) {
    ExperimentConfig guided_cfg = config;
    guided_cfg.strategy = Strategy::ei;
    guided_cfg.output_dir = config.output_dir / "ei";
    ExperimentConfig uniform_cfg = config;
    uniform_cfg.strategy = Strategy::uniform;
    uniform_cfg.output_dir = config.output_dir / "uniform";

    Comparison c{run_experiment(guided_cfg, phantom), run_experiment(uniform_cfg, phantom), {}};
    const MapMetrics& g = c.guided.report.map;
    const MapMetrics& u = c.uniform.report.map;
    c.summary = json{
        {"budget", config.budget},
        {"seed", config.seed},
        {"ei", {{"map_rmse", g.rmse}, {"map_correlation", g.correlation}, {"top_decile_rmse", g.top_decile_rmse}}},
        {"uniform",
         {{"map_rmse", u.rmse}, {"map_correlation", u.correlation}, {"top_decile_rmse", u.top_decile_rmse}}},
        {"top_decile_winner", g.top_decile_rmse < u.top_decile_rmse ? "ei" : "uniform"},
    };
    return c;
}

}  // namespace palpation::experiment
