// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "volterra/io.hpp"
#include "volterra/pipeline.hpp"

using namespace volterra;
using namespace volterra::oracle;
namespace fs = std::filesystem;

namespace {

// Grid used for the example reproductions. The true poles and pairs are
// planted on top of it.
constexpr std::size_t kRadial = 3;
constexpr std::size_t kAngular = 6;
constexpr std::uint64_t kSeedBase = 1000;

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Modulus in [0.5, 2] so that every planted atom carries real weight.
Complex random_coeff(Rng& rng, bool real) {
    const double mag = rng.uniform(0.5, 2.0);
    if (real) return rng.uniform01() < 0.5 ? mag : -mag;
    return std::polar(mag, rng.uniform(-std::numbers::pi, std::numbers::pi));
}

AtomicModel random_model(Rng& rng, std::size_t n_first, std::size_t n_second) {
    AtomicModel m;
    m.h0 = rng.uniform(-1, 1);
    for (std::size_t i = 0; i < n_first; ++i) {
        const bool real = rng.uniform01() < 0.3;
        m.first_order.push_back({{random_pole(rng, real), rng.uniform(0.5, 2.0)}, random_coeff(rng, real)});
    }
    for (std::size_t i = 0; i < n_second; ++i) {
        Pole a = random_pole(rng, false), b = random_pole(rng, rng.uniform01() < 0.3);
        canonicalize_pair(a, b);
        m.second_order.push_back({{a, b, rng.uniform(0.5, 2.0)}, random_coeff(rng, false)});
    }
    return m;
}

std::string fmt(const char* f, double a, double b = 0.0) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

// 1. Time-domain simulation against the regression product.
Outcome simulation_equivalence() {
    Rng rng(101);
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
        const std::size_t memory = 1 + rng.below(6);
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.below(50));
        const AtomicModel m = random_model(rng, rng.below(4), rng.below(4));
        const VolterraKernels k = eval_kernels(m, memory);
        const Eigen::VectorXd x = random_input(rng, n);
        const Eigen::VectorXd a = simulate(k, x);
        const Eigen::VectorXd b = regression_matrix(x, memory) * stack(k);
        worst = std::max(worst, (a - b).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-10, fmt("max |sim - X stack| = %.2e", worst)};
}

// 2. Branch and bound against enumeration of every support.
Outcome mip_exactness() {
    Rng rng(102);
    int mismatches = 0, infeasible_cases = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n1 = 1 + rng.below(4), n2 = rng.below(4);  // plus the constant: <= 8 atoms
        const AtomCatalog c = random_catalog(rng, n1, n2);
        Problem p = make_problem(c, 8, random_input(rng, 40), sparse_coeffs(rng, c, 1 + rng.below(std::min<std::size_t>(3, n1 + n2))));
        Eigen::VectorXd noise(p.target.size());
        for (auto& v : noise) v = rng.uniform(-0.05, 0.05);
        p.target += noise;
        // Every fifth problem asks for less residual than any support can reach.
        p.epsilon = trial % 5 == 4 ? 1e-3 * noise.squaredNorm() : rng.uniform(1.0, 3.0) * noise.squaredNorm();
        p.big_M = 1e9;
        const Exhaustive ex = exhaustive_search(p);
        bool ok = false;
        try {
            const SolveResult r = solve_mip(p);
            ok = ex.feasible && r.cardinality == ex.cardinality && r.residual_sq <= p.epsilon * (1 + 1e-9);
        } catch (const InfeasibleError&) {
            ok = !ex.feasible;
            ++infeasible_cases;
        }
        mismatches += ok ? 0 : 1;
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches in 50 (" + std::to_string(infeasible_cases) +
                                 " infeasible)"};
}

// 3. Exact recovery of a planted 3-atom model from noiseless data.
Outcome noiseless_recovery() {
    int passed = 0;
    double worst_rel = 0.0;
    for (int s = 0; s < 20; ++s) {
        Rng rng(300 + s);
        const std::size_t n2 = 1 + rng.below(2);
        AtomicModel truth = random_model(rng, 3 - n2, n2);
        truth.h0 = 0.0;
        for (auto& t : truth.first_order) t.atom.scale = 1.0;
        for (auto& t : truth.second_order) t.atom.scale = 1.0;

        const std::vector<Pole> poles = model_poles(truth);
        const PoleGrid grid = augment_grid(build_grid(2, 4, 0.2, 0.9), poles);
        std::vector<SecondOrderAtom> pairs;
        for (const auto& t : truth.second_order) pairs.push_back(t.atom);
        // Fill the catalog up to 40 atoms with sampled pairs.
        AtomCatalog catalog;
        for (std::size_t k = 40 - grid.poles.size() - pairs.size(); catalog.n_atoms() < 40; ++k) {
            catalog = augment_catalog(build_catalog(grid, PairPolicy::sampled(k), 1.0, 1.0, 7 + s), pairs);
        }

        const std::size_t memory = memory_for_decay(grid.max_radius);
        const Dictionary dict(catalog, memory);
        const Eigen::VectorXd x = random_input(rng, 120);
        Problem p;
        p.output_dictionary = dict.output_matrix(x);
        p.target = simulate(eval_kernels(truth, memory), x);
        p.catalog = catalog;
        p.epsilon = 1e-10 * p.target.squaredNorm();

        const Eigen::VectorXd w_true = catalog_coeffs(truth, catalog);
        std::vector<std::size_t> true_groups;
        const auto layout = column_groups(catalog);
        for (std::size_t g = 0; g < layout.size(); ++g) {
            if (w_true.segment(static_cast<Eigen::Index>(layout[g].first), static_cast<Eigen::Index>(layout[g].size)).norm() > 0) {
                true_groups.push_back(g);
            }
        }

        const SupportFit fit = extract_support(p, solve_l1(p), 1e-6);
        bool ok = fit.groups == true_groups;
        if (ok) {
            for (std::size_t g : true_groups) {
                const auto seg = [&](const Eigen::VectorXd& w) {
                    return w.segment(static_cast<Eigen::Index>(layout[g].first), static_cast<Eigen::Index>(layout[g].size));
                };
                const double rel = (seg(fit.coeffs) - seg(w_true)).norm() / seg(w_true).norm();
                worst_rel = std::max(worst_rel, rel);
                ok = ok && rel <= 1e-6;
            }
        }
        passed += ok ? 1 : 0;
    }
    return {passed == 20, std::to_string(passed) + "/20 seeds, worst coefficient error " + fmt("%.1e", worst_rel)};
}

struct ExampleRun {
    Report report;
    double spacing = 0.0;
};

ExampleRun run_example(const std::string& preset, std::uint64_t seed, double drop_pct) {
    ExperimentConfig c;
    c.apply_preset(preset);
    c.seed = seed;
    c.grid_radial = kRadial;
    c.grid_angular = kAngular;
    c.plant_true_poles = true;
    c.mask_drop_pct = drop_pct;
    const SimulationOutput sim = run_simulate(c);
    IdentifyOutput out = run_identify(c, sim.dataset, c.system);
    const double spacing = out.report.grid ? out.report.grid->spacing() : 0.0;
    return {std::move(out.report), spacing};
}

bool poles_matched(const ExampleRun& r) {
    for (const auto& pm : r.report.metrics->pole_match_report) {
        if (pm.distance > r.spacing) return false;
    }
    return true;
}

// 4 to 6. Statistical reproduction of the two reference systems.
Outcome example_band(const std::string& preset, double drop_pct, std::size_t needed,
                     const std::function<bool(const ExampleRun&)>& accept) {
    std::size_t passed = 0;
    std::ostringstream cards;
    for (std::uint64_t s = 0; s < 10; ++s) {
        try {
            const ExampleRun r = run_example(preset, kSeedBase + s, drop_pct);
            const bool ok = accept(r);
            passed += ok ? 1 : 0;
            cards << r.report.cardinality << (ok ? "" : "*") << ' ';
        } catch (const std::exception& e) {
            cards << "error(" << e.what() << ") ";
        }
    }
    return {passed >= needed, std::to_string(passed) + "/10 seeds (need " + std::to_string(needed) +
                                  "), cardinalities " + cards.str()};
}

// 7. Frank-Wolfe feasibility, monotonicity and convergence.
Outcome frank_wolfe_properties() {
    Rng rng(107);
    const AtomCatalog c = random_catalog(rng, 25, 25);
    const Eigen::VectorXd w = sparse_coeffs(rng, c, 3);
    Problem p = make_problem(c, 10, random_input(rng, 80), w);
    p.tau = atomic_l1_cost(w, c);
    FwOptions opt;
    opt.record_iterates = true;
    opt.max_iter = 50000;
    opt.gap_tol = 1e-10;
    const FwResult r = solve_fw_traced(p, opt);
    double worst_cost = 0.0;
    for (double cost : r.cost_trace) worst_cost = std::max(worst_cost, cost / p.tau);
    bool monotone = true;
    const auto& trace = r.result.objective_trace;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        monotone = monotone && trace[i] <= trace[i - 1] + 1e-12 * std::max(1.0, trace[i - 1]);
    }
    const double rel = r.result.residual_sq / p.target.squaredNorm();
    const bool a = worst_cost <= 1 + 1e-9, c_ok = rel <= 1e-6;
    return {a && monotone && c_ok, fmt("(a) max cost/tau = %.12f, ", worst_cost) + "(b) monotone " +
                                       (monotone ? "yes" : "no") + fmt(", (c) objective/|y|^2 = %.2e after ", rel) +
                                       std::to_string(r.result.iterations) + " iterations"};
}

// 8. Gradient against central differences and prox against a scalar search.
Outcome gradient_and_prox() {
    Rng rng(108);
    double worst_grad = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const AtomCatalog c = random_catalog(rng, 3, 2);
        Problem p = make_problem(c, 6, random_input(rng, 30), sparse_coeffs(rng, c, 2));
        for (auto& t : p.target) t += rng.uniform(-0.1, 0.1);
        Eigen::VectorXd w(c.n_columns());
        for (auto& v : w) v = rng.uniform(-1, 1);
        const Eigen::VectorXd g = residual_gradient(p, w);
        Eigen::VectorXd fd(w.size());
        const double h = 1e-5;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            Eigen::VectorXd a = w, b = w;
            a(i) += h;
            b(i) -= h;
            fd(i) = (residual_sq(p, a) - residual_sq(p, b)) / (2 * h);
        }
        worst_grad = std::max(worst_grad, (g - fd).norm() / g.norm());
    }
    double worst_prox = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        double z[2] = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const double t = rng.uniform(0, 2.5), norm = std::hypot(z[0], z[1]);
        group_soft_threshold(z, t);
        worst_prox = std::max(worst_prox, std::abs(std::hypot(z[0], z[1]) - prox_radius_brute_force(norm, t)));
    }
    return {worst_grad <= 1e-5 && worst_prox <= 1e-8,
            fmt("gradient rel err %.2e, prox err %.2e", worst_grad, worst_prox)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 9. Lossless files and a byte-identical pipeline.
Outcome serialization() {
    const fs::path dir = fs::temp_directory_path() / "volterra_acceptance";
    fs::remove_all(dir);
    ExperimentConfig c;
    c.apply_preset("example2");
    c.seed = 909;
    c.grid_radial = 3;
    c.grid_angular = 6;
    c.plant_true_poles = true;
    c.mask_drop_pct = 20.0;

    const SimulationOutput sim = run_simulate(c);
    const Dataset back = signals_from_csv(signals_to_csv(sim.dataset));
    double worst = 0.0;
    for (Eigen::Index k = 0; k < back.input.size(); ++k) {
        const auto rel = [](double a, double b) { return a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
        worst = std::max(worst, rel(back.input(k), sim.dataset.input(k)));
        if (sim.dataset.mask[static_cast<std::size_t>(k)]) worst = std::max(worst, rel(back.output_noisy(k), sim.dataset.output_noisy(k)));
    }
    const bool mask_ok = back.mask == sim.dataset.mask;

    std::vector<std::string> runs[2];
    for (auto& files : runs) {
        cmd_simulate(c, dir);
        cmd_identify(c, dir / "dataset.csv", dir / "truth.json", dir);
        cmd_report(dir / "report.json", std::nullopt, dir / "plots");
        for (const char* name : {"dataset.csv", "truth.json", "report.json", "plots/h1.csv", "plots/h2_diag.csv",
                                 "plots/h2_slices.csv", "plots/output.csv", "plots/error.csv"}) {
            files.push_back(slurp(dir / name));
        }
    }
    const Report r = load_report(dir / "report.json");
    const bool report_ok = to_json(report_from_json(to_json(r))).dump() == to_json(r).dump();
    fs::remove_all(dir);
    const bool identical = runs[0] == runs[1];
    return {worst <= 1e-15 && mask_ok && report_ok && identical,
            fmt("csv rel err %.1e, ", worst) + "report round trip " + (report_ok ? "exact" : "lossy") +
                ", pipeline rerun " + (identical ? "byte-identical" : "differs")};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {"simulation equals regression product", 5, simulation_equivalence},
        {"branch and bound matches exhaustive search", 60, mip_exactness},
        {"noiseless exact recovery", 300, noiseless_recovery},
        {"example1 band", 300,
         [] {
             return example_band("example1", 0.0, 8, [](const ExampleRun& r) {
                 return r.report.cardinality >= 4 && r.report.cardinality <= 8 &&
                        r.report.metrics->output_rmse <= r.report.eta_max;
             });
         }},
        {"example2 band with pole match", 300,
         [] {
             return example_band("example2", 0.0, 8, [](const ExampleRun& r) {
                 return r.report.cardinality >= 4 && r.report.cardinality <= 8 &&
                        r.report.metrics->output_rmse <= r.report.eta_max && poles_matched(r);
             });
         }},
        {"example2 with 30% missing samples", 300,
         [] {
             return example_band("example2", 30.0, 7, [](const ExampleRun& r) {
                 return r.report.residual_sq <= r.report.epsilon * (1 + 1e-9) && r.report.cardinality <= 10;
             });
         }},
        {"frank-wolfe properties", 30, frank_wolfe_properties},
        {"gradient and prox", 60, gradient_and_prox},
        {"serialization and determinism", 120, serialization},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = dt <= criteria[i].budget_s;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("%s %zu %s: %s; %.1f s (limit %.0f s)\n", pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                    o.detail.c_str(), dt, criteria[i].budget_s);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
