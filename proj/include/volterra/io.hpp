// File formats: CSV signals and JSON reports.
//
// Signals CSV: header `t,x,y,mask`, one row per sample, t the sample index,
// mask 1 (observed) or 0. `y` may be empty on unobserved rows.
//
// Report JSON:
//   { "solver", "config", "grid", "atoms": [{"kind", "poles": [[re, im], ...],
//     "coeff": [re, im], "scale"}], "h0", "metrics", "trace", "seed", ... }
// Unknown fields are ignored on load.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "volterra/atoms.hpp"
#include "volterra/data.hpp"
#include "volterra/model.hpp"

namespace volterra {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

void save_signals(const std::filesystem::path& path, const Dataset& dataset);
std::string signals_to_csv(const Dataset& dataset);
/// Throws IoError naming the offending line.
Dataset load_signals(const std::filesystem::path& path);
Dataset signals_from_csv(const std::string& text);

struct Report {
    std::string solver;
    nlohmann::json config = nlohmann::json::object();
    std::optional<PoleGrid> grid;
    std::optional<AtomCatalog> catalog;  // only policy, scales and seed are serialized
    AtomicModel model;
    std::optional<AtomicModel> truth;
    std::optional<Metrics> metrics;
    std::vector<double> trace;
    std::uint64_t seed = 0;
    std::size_t memory = 0;
    std::size_t cardinality = 0;
    double residual_sq = 0.0;
    bool converged = false;
    double eta_max = 0.0;
    double epsilon = 0.0;
    double tau = 0.0;
    double lambda = 0.0;
};

nlohmann::json to_json(const AtomicModel& model);
AtomicModel model_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PoleGrid& grid);
PoleGrid grid_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Metrics& metrics);
Metrics metrics_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

void save_report(const std::filesystem::path& path, const Report& report);
Report load_report(const std::filesystem::path& path);

}  // namespace volterra
