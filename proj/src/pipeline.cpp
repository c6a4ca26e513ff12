#include "volterra/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "volterra/presets.hpp"

namespace volterra {

namespace {

using nlohmann::json;

template <typename T>
void read_field(const json& section, const char* key, T& target) {
    const auto it = section.find(key);
    if (it == section.end() || it->is_null()) return;
    try {
        target = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

template <typename T>
void read_field(const json& section, const char* key, std::optional<T>& target) {
    const auto it = section.find(key);
    if (it == section.end()) return;
    if (it->is_null()) {
        target.reset();
        return;
    }
    try {
        target = it->get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

const json& section(const json& j, const char* key) {
    static const json empty = json::object();
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return empty;
    if (!it->is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
    return *it;
}

NoiseBound noise_bound_from(const std::string& s) {
    if (s == "per_sample") return NoiseBound::kPerSample;
    if (s == "vector") return NoiseBound::kVector;
    throw ConfigError("noise_bound must be 'per_sample' or 'vector', got '" + s + "'");
}

StepRule step_rule_from(const std::string& s) {
    if (s == "exact") return StepRule::kExactLineSearch;
    if (s == "open_loop") return StepRule::kOpenLoop;
    throw ConfigError("step_rule must be 'exact' or 'open_loop', got '" + s + "'");
}

std::size_t system_memory(const ExperimentConfig& config) {
    if (config.memory) return *config.memory;
    return memory_for_decay(config.system.max_pole_modulus());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

struct GridAndCatalog {
    PoleGrid grid;
    AtomCatalog catalog;
};

GridAndCatalog make_catalog(const ExperimentConfig& config, const std::optional<AtomicModel>& truth) {
    PoleGrid grid;
    try {
        grid = build_grid(config.grid_radial, config.grid_angular, config.grid_min_radius, config.grid_max_radius);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    if (config.plant_true_poles) {
        if (!truth) throw ConfigError("planting true poles needs a ground-truth report");
        const std::vector<Pole> poles = model_poles(*truth);
        grid = augment_grid(std::move(grid), poles);
    }
    PairPolicy policy;
    try {
        policy = PairPolicy::parse(config.pair_policy, 0);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (policy.kind == PairPolicy::Kind::kSampled) {
        const std::size_t available = canonical_pairs(grid, config.scale_beta).size();
        policy.count = config.pair_count ? *config.pair_count : std::min(4 * grid.poles.size(), available);
    }
    AtomCatalog catalog;
    try {
        catalog = build_catalog(grid, policy, config.scale_alpha, config.scale_beta, config.grid_seed());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("catalog: ") + e.what());
    }
    if (config.plant_true_poles && policy.kind != PairPolicy::Kind::kNone) {
        std::vector<SecondOrderAtom> pairs;
        for (const auto& t : truth->second_order) pairs.push_back({t.atom.pole1, t.atom.pole2, config.scale_beta});
        catalog = augment_catalog(std::move(catalog), pairs);
    }
    return {std::move(grid), std::move(catalog)};
}

}  // namespace

void ExperimentConfig::apply_preset(const std::string& name) {
    ExamplePreset p;
    try {
        p = load_preset(name);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    preset = p.name;
    system = std::move(p.model);
    n_samples = p.n_samples;
    noise_pct = p.noise_pct;
}

json ExperimentConfig::to_json() const {
    json system_json = volterra::to_json(system);
    system_json["preset"] = preset.empty() ? json(nullptr) : json(preset);
    return {
        {"system", system_json},
        {"input", {{"n", n_samples}, {"distribution", "uniform"}, {"lo", input_lo}, {"hi", input_hi}}},
        {"noise", {{"level_pct", noise_pct}, {"distribution", "uniform"}, {"eta_max", optional_json(eta_max)}}},
        {"mask", {{"drop_pct", mask_drop_pct}}},
        {"seed", seed},
        {"grid",
         {{"radial", grid_radial},
          {"angular", grid_angular},
          {"min_radius", grid_min_radius},
          {"max_radius", grid_max_radius},
          {"pairs", pair_policy},
          {"pairs_count", optional_json(pair_count)},
          {"scale_alpha", scale_alpha},
          {"scale_beta", scale_beta},
          {"plant_true_poles", plant_true_poles}}},
        {"memory", optional_json(memory)},
        {"solver",
         {{"name", solver},
          {"epsilon", optional_json(epsilon)},
          {"noise_bound", noise_bound},
          {"tau", optional_json(tau)},
          {"tau_sweep", tau_sweep},
          {"max_iter", max_iter},
          {"tol", tol},
          {"gap_tol", gap_tol},
          {"samples_per_iter", samples_per_iter},
          {"step_rule", step_rule},
          {"away_steps", away_steps},
          {"correction_iters", correction_iters},
          {"max_nodes", max_nodes},
          {"big_m_safety", big_m_safety},
          {"support_threshold", support_threshold},
          {"normalize_columns", normalize_columns},
          {"reweight_rounds", reweight_rounds},
          {"reweight_floor", reweight_floor}}},
    };
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    const json& sys = section(j, "system");
    if (sys.contains("preset") && !sys.at("preset").is_null()) {
        c.apply_preset(sys.at("preset").get<std::string>());
    } else if (sys.contains("atoms")) {
        try {
            c.system = model_from_json(sys);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("system: ") + e.what());
        }
    }

    const json& input = section(j, "input");
    read_field(input, "n", c.n_samples);
    read_field(input, "lo", c.input_lo);
    read_field(input, "hi", c.input_hi);
    if (input.contains("distribution") && input.at("distribution") != "uniform") {
        throw ConfigError("only the uniform input distribution is supported");
    }

    const json& noise = section(j, "noise");
    read_field(noise, "level_pct", c.noise_pct);
    read_field(noise, "eta_max", c.eta_max);
    read_field(section(j, "mask"), "drop_pct", c.mask_drop_pct);
    read_field(j, "seed", c.seed);

    const json& grid = section(j, "grid");
    read_field(grid, "radial", c.grid_radial);
    read_field(grid, "angular", c.grid_angular);
    read_field(grid, "min_radius", c.grid_min_radius);
    read_field(grid, "max_radius", c.grid_max_radius);
    read_field(grid, "pairs", c.pair_policy);
    read_field(grid, "pairs_count", c.pair_count);
    read_field(grid, "scale_alpha", c.scale_alpha);
    read_field(grid, "scale_beta", c.scale_beta);
    read_field(grid, "plant_true_poles", c.plant_true_poles);
    read_field(j, "memory", c.memory);

    const json& solver = section(j, "solver");
    read_field(solver, "name", c.solver);
    read_field(solver, "epsilon", c.epsilon);
    read_field(solver, "noise_bound", c.noise_bound);
    read_field(solver, "tau", c.tau);
    read_field(solver, "tau_sweep", c.tau_sweep);
    read_field(solver, "max_iter", c.max_iter);
    read_field(solver, "tol", c.tol);
    read_field(solver, "gap_tol", c.gap_tol);
    read_field(solver, "samples_per_iter", c.samples_per_iter);
    read_field(solver, "step_rule", c.step_rule);
    read_field(solver, "away_steps", c.away_steps);
    read_field(solver, "correction_iters", c.correction_iters);
    read_field(solver, "max_nodes", c.max_nodes);
    read_field(solver, "big_m_safety", c.big_m_safety);
    read_field(solver, "support_threshold", c.support_threshold);
    read_field(solver, "normalize_columns", c.normalize_columns);
    read_field(solver, "reweight_rounds", c.reweight_rounds);
    read_field(solver, "reweight_floor", c.reweight_floor);

    if (c.solver != "mip" && c.solver != "l1" && c.solver != "fw") {
        throw ConfigError("solver must be one of mip, l1, fw; got '" + c.solver + "'");
    }
    noise_bound_from(c.noise_bound);
    step_rule_from(c.step_rule);
    if (c.n_samples == 0) throw ConfigError("input.n must be positive");
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return from_json(j);
}

std::pair<std::size_t, std::size_t> parse_grid_spec(const std::string& spec) {
    const auto x = spec.find('x');
    if (x == std::string::npos || x == 0 || x + 1 == spec.size()) {
        throw ConfigError("grid spec must look like <radial>x<angular>, got '" + spec + "'");
    }
    try {
        std::size_t used = 0;
        const auto radial = std::stoul(spec.substr(0, x), &used);
        if (used != x) throw std::invalid_argument("trailing characters");
        const std::string rest = spec.substr(x + 1);
        const auto angular = std::stoul(rest, &used);
        if (used != rest.size()) throw std::invalid_argument("trailing characters");
        if (radial == 0 || angular == 0) throw std::invalid_argument("zero count");
        return {radial, angular};
    } catch (const std::logic_error&) {
        throw ConfigError("grid spec must look like <radial>x<angular>, got '" + spec + "'");
    }
}

SimulationOutput run_simulate(const ExperimentConfig& config) {
    const std::size_t memory = system_memory(config);
    SimulationOutput out;
    Dataset& d = out.dataset;
    d.input = uniform_input(config.n_samples, config.input_seed(), config.input_lo, config.input_hi);
    const Eigen::VectorXd clean = simulate(eval_kernels(config.system, memory), d.input);
    NoisyOutput noisy;
    try {
        noisy = add_uniform_noise(clean, config.noise_pct, config.noise_seed());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    d.output_clean = clean;
    d.output_noisy = std::move(noisy.noisy);
    d.eta_max = noisy.eta_max;
    d.seed = config.seed;
    d.mask.assign(config.n_samples, true);
    if (config.mask_drop_pct > 0.0) {
        d = apply_mask(std::move(d), random_drop_indices(config.n_samples, config.mask_drop_pct, config.mask_seed()));
    }
    d.meta["noise"] = "uniform";
    if (!config.preset.empty()) d.meta["preset"] = config.preset;

    Report& truth = out.truth;
    truth.solver = "truth";
    truth.config = config.to_json();
    truth.model = config.system;
    truth.truth = config.system;
    truth.seed = config.seed;
    truth.memory = memory;
    truth.cardinality = config.system.size() + (config.system.h0 != 0.0 ? 1 : 0);
    truth.eta_max = d.eta_max;
    truth.converged = true;
    return out;
}

void cmd_simulate(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
    const SimulationOutput sim = run_simulate(config);
    save_signals(out_dir / "dataset.csv", sim.dataset);
    save_report(out_dir / "truth.json", sim.truth);
}

IdentifyOutput run_identify(const ExperimentConfig& config, const Dataset& dataset,
                            const std::optional<AtomicModel>& truth) {
    GridAndCatalog gc = make_catalog(config, truth);
    const std::size_t memory = config.memory ? *config.memory : memory_for_decay(gc.grid.max_radius);
    Dictionary dictionary(gc.catalog, memory);

    const double eta_max = config.eta_max ? *config.eta_max : dataset.eta_max;
    Problem problem = assemble_problem(dictionary, dataset, 0.0, config.tau.value_or(0.0));
    problem.epsilon = config.epsilon ? *config.epsilon
                                     : epsilon_from_noise(eta_max, dataset.observed_count(),
                                                          noise_bound_from(config.noise_bound));

    SolveResult raw;
    if (config.solver == "mip") {
        problem.big_M = choose_big_M(problem, config.big_m_safety);
        raw = solve_mip(problem, {config.max_nodes});
    } else if (config.solver == "l1") {
        if (!(problem.epsilon > 0.0)) {
            throw ConfigError("the l1 solver needs epsilon > 0 (set solver.epsilon or a positive noise level)");
        }
        L1Options opt;
        opt.tol = config.tol;
        opt.max_iter = config.max_iter;
        opt.activity_threshold = config.support_threshold;
        opt.normalize_columns = config.normalize_columns;
        opt.reweight_rounds = config.reweight_rounds;
        opt.reweight_floor = config.reweight_floor;
        raw = solve_l1(problem, opt);
    } else {
        if (!config.tau) throw ConfigError("the fw solver needs solver.tau (or a tau sweep)");
        FwOptions opt;
        opt.samples_per_iter = config.samples_per_iter;
        opt.max_iter = config.max_iter;
        opt.gap_tol = config.gap_tol;
        opt.seed = config.solver_seed();
        opt.step = step_rule_from(config.step_rule);
        opt.away_steps = config.away_steps;
        opt.correction_iters = config.correction_iters;
        opt.activity_threshold = config.support_threshold;
        raw = solve_fw(problem, opt);
    }
    raw.seed = config.solver_seed();
    SupportFit support = extract_support(problem, raw, config.support_threshold);

    Report r;
    r.solver = config.solver;
    r.config = config.to_json();
    r.grid = gc.grid;
    r.catalog = gc.catalog;
    r.model = support.model;
    r.truth = truth;
    r.trace = raw.objective_trace;
    r.seed = config.seed;
    r.memory = memory;
    r.cardinality = support.cardinality();
    r.residual_sq = support.residual_sq;
    r.converged = raw.converged;
    r.eta_max = eta_max;
    r.epsilon = problem.epsilon;
    r.tau = problem.tau;
    r.lambda = raw.lambda;
    if (truth) r.metrics = compute_metrics(*truth, support.model, support.cardinality(), dataset, memory);
    return {std::move(r), std::move(raw), std::move(support), std::move(problem), std::move(dictionary)};
}

namespace {

struct LoadedInputs {
    Dataset dataset;
    std::optional<AtomicModel> truth;
};

LoadedInputs load_inputs(const std::filesystem::path& data_path, const std::optional<std::filesystem::path>& truth_path) {
    LoadedInputs in{load_signals(data_path), std::nullopt};
    if (truth_path) {
        const Report t = load_report(*truth_path);
        in.dataset.eta_max = t.eta_max;
        in.dataset.seed = t.seed;
        in.truth = t.truth ? t.truth : std::optional<AtomicModel>(t.model);
        const std::size_t mem = t.memory > 0 ? t.memory : memory_for_decay(in.truth->max_pole_modulus());
        in.dataset.output_clean = simulate(eval_kernels(*in.truth, mem), in.dataset.input);
    }
    return in;
}

}  // namespace

Report cmd_identify(const ExperimentConfig& config, const std::filesystem::path& data_path,
                    const std::optional<std::filesystem::path>& truth_path, const std::filesystem::path& out_dir) {
    const LoadedInputs in = load_inputs(data_path, truth_path);
    IdentifyOutput out = run_identify(config, in.dataset, in.truth);
    out.report.config["data"] = data_path.string();
    save_report(out_dir / "report.json", out.report);
    return out.report;
}

std::vector<std::filesystem::path> cmd_report(const std::filesystem::path& report_path,
                                              const std::optional<std::filesystem::path>& data_path,
                                              const std::filesystem::path& out_dir) {
    const Report r = load_report(report_path);
    std::filesystem::path data;
    if (data_path) {
        data = *data_path;
    } else if (r.config.contains("data") && r.config.at("data").is_string()) {
        data = r.config.at("data").get<std::string>();
    } else {
        throw ConfigError("report does not name its dataset; pass --data");
    }
    const Dataset d = load_signals(data);
    const std::size_t memory = r.memory > 0 ? r.memory : memory_for_decay(std::max(r.model.max_pole_modulus(), 0.5));
    const VolterraKernels est = eval_kernels(r.model, memory);
    const Eigen::VectorXd y_est = simulate(est, d.input);
    const auto mem = static_cast<Eigen::Index>(memory);

    std::optional<VolterraKernels> tru;
    std::optional<Eigen::VectorXd> y_true;
    if (r.truth) {
        tru = eval_kernels(*r.truth, memory);
        y_true = simulate(*tru, d.input);
    }

    std::vector<std::filesystem::path> written;
    const auto emit = [&](const std::string& name, const std::string& text) {
        write_text(out_dir / name, text);
        written.push_back(out_dir / name);
    };

    std::ostringstream h1;
    h1 << (tru ? "k,true,estimated\n" : "k,estimated\n");
    for (Eigen::Index k = 0; k < mem; ++k) {
        h1 << k << ',';
        if (tru) h1 << format_double(tru->h1(k)) << ',';
        h1 << format_double(est.h1(k)) << '\n';
    }
    emit("h1.csv", h1.str());

    std::ostringstream diag;
    diag << (tru ? "k,true,estimated\n" : "k,estimated\n");
    for (Eigen::Index k = 0; k < mem; ++k) {
        diag << k << ',';
        if (tru) diag << format_double(tru->h2(k, k)) << ',';
        diag << format_double(est.h2(k, k)) << '\n';
    }
    emit("h2_diag.csv", diag.str());

    // Rows k1 = 0 and k1 = 1 of H2 as functions of k2.
    const Eigen::Index n_slices = std::min<Eigen::Index>(2, mem);
    std::ostringstream slices;
    slices << "k2";
    for (Eigen::Index s = 0; s < n_slices; ++s) {
        if (tru) slices << ",true_k1_" << s;
        slices << ",estimated_k1_" << s;
    }
    slices << '\n';
    for (Eigen::Index k = 0; k < mem; ++k) {
        slices << k;
        for (Eigen::Index s = 0; s < n_slices; ++s) {
            if (tru) slices << ',' << format_double(tru->h2(s, k));
            slices << ',' << format_double(est.h2(s, k));
        }
        slices << '\n';
    }
    emit("h2_slices.csv", slices.str());

    std::ostringstream output;
    output << (y_true ? "t,true,estimated\n" : "t,estimated\n");
    for (Eigen::Index t = 0; t < y_est.size(); ++t) {
        output << t << ',';
        if (y_true) output << format_double((*y_true)(t)) << ',';
        output << format_double(y_est(t)) << '\n';
    }
    emit("output.csv", output.str());

    if (y_true) {
        std::ostringstream err;
        err << "t,error\n";
        for (Eigen::Index t = 0; t < y_est.size(); ++t) err << t << ',' << format_double(y_est(t) - (*y_true)(t)) << '\n';
        emit("error.csv", err.str());
    }
    return written;
}

std::vector<SweepRow> cmd_sweep(const ExperimentConfig& config, const std::filesystem::path& data_path,
                                const std::optional<std::filesystem::path>& truth_path,
                                const std::filesystem::path& out_dir) {
    if (config.tau_sweep.empty()) throw ConfigError("sweep needs at least one tau value");
    const LoadedInputs in = load_inputs(data_path, truth_path);
    const auto n = static_cast<std::ptrdiff_t>(config.tau_sweep.size());
    std::vector<SweepRow> rows(config.tau_sweep.size());
    std::vector<std::string> errors(config.tau_sweep.size());

    // One solver call per worker; rows land at their parameter index.
    #pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            ExperimentConfig c = config;
            c.solver = "fw";
            c.tau = config.tau_sweep[idx];
            c.tau_sweep.clear();
            IdentifyOutput out = run_identify(c, in.dataset, in.truth);
            out.report.config["data"] = data_path.string();
            const auto path = out_dir / ("report_tau_" + std::to_string(idx) + ".json");
            save_report(path, out.report);
            rows[idx] = {*c.tau, out.report.residual_sq, out.report.cardinality,
                         out.report.metrics ? out.report.metrics->output_rmse : -1.0, out.report.converged, path};
        } catch (const std::exception& e) {
            errors[idx] = e.what();
        }
    }
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty()) throw ConfigError("tau " + format_double(config.tau_sweep[i]) + ": " + errors[i]);
    }

    std::ostringstream summary;
    summary << "tau,residual_sq,cardinality,output_rmse,converged,report\n";
    for (const SweepRow& row : rows) {
        summary << format_double(row.tau) << ',' << format_double(row.residual_sq) << ',' << row.cardinality << ','
                << format_double(row.output_rmse) << ',' << (row.converged ? 1 : 0) << ','
                << row.report.filename().string() << '\n';
    }
    write_text(out_dir / "sweep_summary.csv", summary.str());
    return rows;
}

}  // namespace volterra
