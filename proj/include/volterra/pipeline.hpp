// End-to-end experiment pipeline behind the command-line tool:
// simulate -> identify -> report, plus tau sweeps for Frank-Wolfe.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "volterra/atoms.hpp"
#include "volterra/data.hpp"
#include "volterra/io.hpp"
#include "volterra/model.hpp"
#include "volterra/solvers.hpp"

namespace volterra {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    // system
    std::string preset;  // empty when `system` was given explicitly
    AtomicModel system;
    // input
    std::size_t n_samples = 100;
    double input_lo = -1.0;
    double input_hi = 1.0;
    // noise and mask
    double noise_pct = 0.0;
    double mask_drop_pct = 0.0;
    std::optional<double> eta_max;  // overrides the value carried by the dataset
    std::uint64_t seed = 0;
    // grid and catalog
    std::size_t grid_radial = 8;
    std::size_t grid_angular = 16;
    double grid_min_radius = 0.1;
    double grid_max_radius = 0.95;
    std::string pair_policy = "sampled";
    std::optional<std::size_t> pair_count;  // sampled: default 4x first-order atoms
    double scale_alpha = 1.0;
    double scale_beta = 1.0;
    bool plant_true_poles = false;
    std::optional<std::size_t> memory;  // auto from the grid's largest modulus
    // solver
    std::string solver = "l1";
    std::optional<double> epsilon;
    std::string noise_bound = "per_sample";
    std::optional<double> tau;
    std::vector<double> tau_sweep;
    std::size_t max_iter = 20000;
    double tol = 1e-10;
    double gap_tol = 1e-6;
    std::size_t samples_per_iter = 0;
    std::string step_rule = "exact";
    bool away_steps = true;  // fw only
    std::size_t correction_iters = 20;  // fw only
    std::size_t max_nodes = 200000;
    double big_m_safety = 10.0;
    double support_threshold = 1e-6;
    bool normalize_columns = true;    // l1 only
    std::size_t reweight_rounds = 4;  // l1 only
    double reweight_floor = 1e-3;

    /// Sub-seeds derived from `seed` for each random stage.
    std::uint64_t input_seed() const { return seed; }
    std::uint64_t noise_seed() const { return seed + 1; }
    std::uint64_t mask_seed() const { return seed + 2; }
    std::uint64_t grid_seed() const { return seed + 3; }
    std::uint64_t solver_seed() const { return seed + 4; }

    /// Replaces system, N and noise level with a named preset.
    void apply_preset(const std::string& name);

    nlohmann::json to_json() const;
    /// Starts from defaults (and the preset, if named), then applies fields
    /// present in `j`. Throws ConfigError.
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::filesystem::path& path);
};

/// Parses "<radial>x<angular>".
std::pair<std::size_t, std::size_t> parse_grid_spec(const std::string& spec);

struct SimulationOutput {
    Dataset dataset;
    Report truth;
};

/// Generates input, clean and noisy outputs and the mask. Deterministic.
SimulationOutput run_simulate(const ExperimentConfig& config);

/// Writes <out>/dataset.csv and <out>/truth.json.
void cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct IdentifyOutput {
    Report report;
    SolveResult raw;
    SupportFit support;
    Problem problem;
    Dictionary dictionary;
};

/// Builds grid, catalog and dictionary, solves, extracts the support and
/// computes metrics when `truth` is available. Throws InfeasibleError.
IdentifyOutput run_identify(const ExperimentConfig& config, const Dataset& dataset,
                            const std::optional<AtomicModel>& truth);

/// Loads the dataset (and truth report, if present), runs the identification
/// and writes <out>/report.json.
Report cmd_identify(const ExperimentConfig& config, const std::filesystem::path& data_path,
                    const std::optional<std::filesystem::path>& truth_path, const std::filesystem::path& out_dir);

/// Writes h1.csv, h2_diag.csv, h2_slices.csv, output.csv and (with ground
/// truth) error.csv. Returns the list of files written.
std::vector<std::filesystem::path> cmd_report(const std::filesystem::path& report_path,
                                              const std::optional<std::filesystem::path>& data_path,
                                              const std::filesystem::path& out_dir);

struct SweepRow {
    double tau = 0.0;
    double residual_sq = 0.0;
    std::size_t cardinality = 0;
    double output_rmse = -1.0;  // -1 without ground truth
    bool converged = false;
    std::filesystem::path report;
};

/// One Frank-Wolfe identification per tau in config.tau_sweep, writing
/// <out>/report_tau_<i>.json and <out>/sweep_summary.csv.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config, const std::filesystem::path& data_path,
                                const std::optional<std::filesystem::path>& truth_path,
                                const std::filesystem::path& out_dir);

}  // namespace volterra
