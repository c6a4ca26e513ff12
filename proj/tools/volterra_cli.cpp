// volterra: simulate, identify and report sparse second-order Volterra models.
//
// Exit codes: 0 success, 1 solver infeasibility, 2 I/O or configuration error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "volterra/io.hpp"
#include "volterra/pipeline.hpp"
#include "volterra/solvers.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string preset;
    std::string solver;
    std::optional<std::uint64_t> seed;
    std::string grid;
    bool plant = false;
    std::optional<double> mask_drop;
    std::string out = ".";
    std::string data;
    std::string truth;
    std::optional<double> epsilon;
    std::optional<double> tau;
    std::string taus;
    std::optional<std::size_t> memory;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON experiment config");
    cmd->add_option("--preset", f.preset, "Reference system: example1 | example2");
    cmd->add_option("--solver", f.solver, "Identification solver: mip | l1 | fw");
    cmd->add_option("--seed", f.seed, "Master seed (u64)");
    cmd->add_option("--grid", f.grid, "Pole grid <radial>x<angular>");
    cmd->add_flag("--plant-true-poles", f.plant, "Add the ground-truth poles and pairs to the catalog");
    cmd->add_option("--mask-drop", f.mask_drop, "Percentage of samples to mark unobserved");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--memory", f.memory, "Kernel memory L (default: from pole decay)");
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::logic_error&) {
            throw volterra::ConfigError("cannot parse tau value '" + item + "'");
        }
    }
    return out;
}

volterra::ExperimentConfig resolve(const CommonFlags& f) {
    volterra::ExperimentConfig c = f.config_path.empty() ? volterra::ExperimentConfig{}
                                                         : volterra::ExperimentConfig::load(f.config_path);
    if (!f.preset.empty()) c.apply_preset(f.preset);
    if (!f.solver.empty()) {
        if (f.solver != "mip" && f.solver != "l1" && f.solver != "fw") {
            throw volterra::ConfigError("--solver must be mip, l1 or fw");
        }
        c.solver = f.solver;
    }
    if (f.seed) c.seed = *f.seed;
    if (!f.grid.empty()) std::tie(c.grid_radial, c.grid_angular) = volterra::parse_grid_spec(f.grid);
    if (f.plant) c.plant_true_poles = true;
    if (f.mask_drop) c.mask_drop_pct = *f.mask_drop;
    if (f.epsilon) c.epsilon = f.epsilon;
    if (f.tau) c.tau = f.tau;
    if (!f.taus.empty()) c.tau_sweep = parse_list(f.taus);
    if (f.memory) c.memory = f.memory;
    return c;
}

std::optional<fs::path> truth_path(const CommonFlags& f) {
    if (!f.truth.empty()) return fs::path(f.truth);
    const fs::path guess = fs::path(f.out) / "truth.json";
    if (fs::exists(guess)) return guess;
    return std::nullopt;
}

fs::path data_path(const CommonFlags& f) { return f.data.empty() ? fs::path(f.out) / "dataset.csv" : fs::path(f.data); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse identification of second-order Volterra systems with exponential kernels"};
    app.require_subcommand(1);

    CommonFlags f;
    std::string report_file;

    auto* simulate = app.add_subcommand("simulate", "Generate a dataset and ground-truth report");
    add_common(simulate, f);

    auto* identify = app.add_subcommand("identify", "Identify a sparse model from a dataset");
    add_common(identify, f);
    identify->add_option("--data", f.data, "Signals CSV (default <out>/dataset.csv)");
    identify->add_option("--truth", f.truth, "Ground-truth report (default <out>/truth.json if present)");
    identify->add_option("--epsilon", f.epsilon, "Residual bound (default from eta_max)");
    identify->add_option("--tau", f.tau, "Atomic cost radius for fw");
    identify->add_option("--tau-sweep", f.taus, "Comma-separated tau values; runs one fw identification per value");

    auto* report = app.add_subcommand("report", "Emit plot-ready CSV series from a report");
    report->add_option("--report", report_file, "Report JSON")->required();
    report->add_option("--data", f.data, "Signals CSV (default: path recorded in the report)");
    report->add_option("--out", f.out, "Output directory");

    auto* sweep = app.add_subcommand("sweep", "Frank-Wolfe identification over a list of tau values");
    add_common(sweep, f);
    sweep->add_option("--data", f.data, "Signals CSV (default <out>/dataset.csv)");
    sweep->add_option("--truth", f.truth, "Ground-truth report (default <out>/truth.json if present)");
    sweep->add_option("--taus", f.taus, "Comma-separated tau values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*simulate) {
            const volterra::ExperimentConfig c = resolve(f);
            volterra::cmd_simulate(c, f.out);
            std::cout << "wrote " << (fs::path(f.out) / "dataset.csv").string() << " and "
                      << (fs::path(f.out) / "truth.json").string() << '\n';
        } else if (*identify || *sweep) {
            volterra::ExperimentConfig c = resolve(f);
            if (*sweep || !c.tau_sweep.empty()) {
                const auto rows = volterra::cmd_sweep(c, data_path(f), truth_path(f), f.out);
                std::cout << "tau,residual_sq,cardinality,output_rmse\n";
                for (const auto& row : rows) {
                    std::cout << row.tau << ',' << row.residual_sq << ',' << row.cardinality << ',' << row.output_rmse
                              << '\n';
                }
            } else {
                const volterra::Report r = volterra::cmd_identify(c, data_path(f), truth_path(f), f.out);
                std::cout << "solver " << r.solver << ": cardinality " << r.cardinality << ", residual_sq "
                          << r.residual_sq << ", epsilon " << r.epsilon;
                if (r.metrics) std::cout << ", output_rmse " << r.metrics->output_rmse << " (eta_max " << r.eta_max << ')';
                std::cout << '\n';
            }
        } else if (*report) {
            const auto files = volterra::cmd_report(report_file, f.data.empty() ? std::nullopt : std::optional<fs::path>(f.data),
                                                    f.out);
            const volterra::Report r = volterra::load_report(report_file);
            if (!r.truth) std::cout << "notice: report has no ground truth; emitting estimated series only\n";
            for (const auto& p : files) std::cout << "wrote " << p.string() << '\n';
        }
    } catch (const volterra::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\nsuggested epsilon >= " << e.min_residual_sq() << '\n';
        return 1;
    } catch (const volterra::NodeBudgetExceeded& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
