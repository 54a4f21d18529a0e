#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "palpation/acquisition.hpp"
#include "palpation/cmu.hpp"
#include "palpation/gp.hpp"
#include "palpation/simulator.hpp"

namespace palpation::experiment {

enum class Strategy { ei, uniform };

std::string to_string(Strategy s);

/// Registration settings as written in a config file; the seed list is
/// expanded at run time from the master seed.
struct RegistrationSettings {
    double tangent_distance_threshold = 1.0;
    double normal_angle_threshold = 10.0;
    double min_force_difference = 0.05;
    int max_iterations = 50;
    double convergence_tolerance = 1e-3;
    int random_seeds = 10;
    double seed_translation_range = 10.0;  // mm
    double seed_rotation_range = 15.0;     // deg
    /// Probes between registrations in the guided loop; 0 registers only once
    /// the probing is finished.
    int interval = 1;
};

struct ExperimentConfig {
    std::filesystem::path phantom_path;
    sim::ROI roi;
    sim::ProbeConfig probe;
    sim::NoiseSpec noise = sim::NoiseSpec::none();
    gp::KernelParams kernel;
    acquisition::SamplingPolicy policy;
    int budget = 100;
    RegistrationSettings registration;
    Strategy strategy = Strategy::ei;
    std::filesystem::path output_dir = "palpation_out";
    std::uint64_t seed = 0;

    void validate() const;
};

/// Parses a config document. Relative phantom paths resolve against `base_dir`.
/// Unknown keys, wrong types and invalid values raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Independent RNG stream for `stream` derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

cmu::CMUConfig make_cmu_config(const ExperimentConfig& config);

/// Evenly spaced lattice (boundary inclusive) with `count` points over the ROI.
std::vector<Vec2> uniform_lattice(const sim::ROI& roi, int count);

struct MapMetrics {
    double rmse = 0.0;
    double correlation = 0.0;
    double top_decile_rmse = 0.0;
};

/// RMSE and Pearson correlation of `estimate` against `truth`, plus the RMSE
/// restricted to grid points whose true value reaches the 90th percentile.
MapMetrics map_metrics(std::span<const double> estimate, std::span<const double> truth);

struct ExperimentReport {
    RigidTransform true_transform;
    RigidTransform estimated_transform;
    PoseParams translation_rotation_error;  // absolute per-axis differences
    double rms_mm = 0.0;
    int probe_count = 0;
    double objective = 0.0;
    int registration_iterations = 0;
    std::size_t compatible_sets = 0;
    MapMetrics map;
    double wall_clock_seconds = 0.0;
};

/// Everything produced by one run, for writing files and for inspection.
struct ExperimentResult {
    ExperimentConfig config;
    ExperimentReport report;
    std::vector<sim::ProbeEvent> probes;
    std::vector<cmu::ProbeMeasurement> measurements;
    std::vector<cmu::CompatibleSet> sets;
    std::vector<cmu::StiffnessSample> stiffness;
    cmu::RegistrationResult registration;
    gp::GPModel model;
    std::vector<Vec2> grid;
    gp::Prediction prediction;
    std::vector<double> expected_improvement;
    std::vector<double> ground_truth;
};

/// Probe-and-update loop: probe the initial samples, then repeatedly estimate
/// stiffness, register, fit the GP and choose the next target, until the
/// budget is spent or every grid point has been probed.
ExperimentResult run_experiment(const ExperimentConfig& config, const sim::PhantomSpec& phantom);
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Points used for the registration RMS: every sensed position, tool frame.
std::vector<Vec3> rms_points(std::span<const cmu::ProbeMeasurement> measurements);

nlohmann::json report_to_json(const ExperimentReport& report, Strategy strategy);

std::string stiffness_map_csv(const ExperimentResult& result);
std::string probe_log_csv(const ExperimentResult& result);
std::string registration_trace_csv(const ExperimentResult& result);
std::string registered_probes_csv(const ExperimentResult& result);

/// Writes report.json, stiffness_map.csv, probe_log.csv, heatmap.pgm,
/// registration_trace.csv and registered_probes.csv into `dir`.
void write_outputs(const ExperimentResult& result, const std::filesystem::path& dir);

struct Comparison {
    ExperimentResult guided;
    ExperimentResult uniform;
    nlohmann::json summary;
};

/// Runs the same phantom, budget and seed with the EI and uniform strategies.
Comparison compare_strategies(const ExperimentConfig& config, const sim::PhantomSpec& phantom);

}  // namespace palpation::experiment
