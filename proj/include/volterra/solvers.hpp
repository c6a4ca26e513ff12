// Sparse identification over an atom dictionary.
//
// All solvers work on the real reparametrization w of the complex atom
// coefficients (see atoms.hpp) and the observed-output dictionary
// A = rows_observed(X * D). Three routes are provided:
//
//   solve_mip  min #atoms            s.t. ||t - A w||^2 <= eps   (branch and bound)
//   solve_l1   min cost(w)           s.t. ||t - A w||^2 <= eps   (penalty path)
//   solve_fw   min ||t - A w||^2     s.t. cost(w) <= tau         (randomized Frank-Wolfe)
//
// where cost is the grouped l1 norm atomic_l1_cost.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "volterra/atoms.hpp"
#include "volterra/model.hpp"

namespace volterra {

struct Problem {
    Eigen::MatrixXd output_dictionary;  // N_obs x n_columns
    Eigen::VectorXd target;             // N_obs
    AtomCatalog catalog;
    double epsilon = 0.0;  // residual bound, mip and l1
    double tau = 0.0;      // atomic cost radius, fw
    double big_M = 0.0;    // coefficient bound, mip; <= 0 selects choose_big_M(problem, 10)

    /// Throws std::invalid_argument when shapes disagree with the catalog.
    void validate() const;
};

/// How the per-sample bound |eta(k)| <= eta_max is turned into a residual
/// bound: per-sample sums the squares over observed samples, vector treats
/// eta_max as a bound on the whole noise vector.
enum class NoiseBound { kPerSample, kVector };

double epsilon_from_noise(double eta_max, std::size_t n_observed, NoiseBound mode = NoiseBound::kPerSample);

struct SolveResult {
    Eigen::VectorXd coeffs;
    AtomicModel model;
    double residual_sq = 0.0;
    std::size_t cardinality = 0;
    std::vector<double> objective_trace;
    std::string solver_name;
    bool converged = false;
    std::uint64_t seed = 0;
    double lambda = 0.0;  // l1: penalty of the returned iterate
    double tau = 0.0;     // fw: ball radius
    std::size_t iterations = 0;
};

class InfeasibleError : public std::runtime_error {
public:
    InfeasibleError(const std::string& what, double min_residual_sq)
        : std::runtime_error(what), min_residual_sq_(min_residual_sq) {}
    /// Smallest achievable residual; any epsilon at or above it is feasible.
    double min_residual_sq() const { return min_residual_sq_; }

private:
    double min_residual_sq_;
};

class NodeBudgetExceeded : public std::runtime_error {
public:
    NodeBudgetExceeded(const std::string& what, std::optional<SolveResult> incumbent)
        : std::runtime_error(what), incumbent_(std::move(incumbent)) {}
    const std::optional<SolveResult>& incumbent() const { return incumbent_; }

private:
    std::optional<SolveResult> incumbent_;
};

double residual_sq(const Problem& problem, const Eigen::VectorXd& w);

/// Gradient of ||t - A w||^2, i.e. -2 A^T (t - A w).
Eigen::VectorXd residual_gradient(const Problem& problem, const Eigen::VectorXd& w);

/// Number of groups whose modulus exceeds threshold_rel times the largest.
std::size_t count_active(const Eigen::VectorXd& w, const AtomCatalog& catalog, double threshold_rel);

/// Minimizer of 0.5 ||z - x||^2 + t ||z||_2, applied in place:
/// x <- max(0, 1 - t / ||x||) x.
void group_soft_threshold(std::span<double> x, double t);

/// Smallest penalty for which the l1 penalty path is identically zero:
/// max over groups of ||A_g^T t||.
double lambda_max(const Problem& problem);

/// Least-squares fit of the target on a subset of column groups. Coefficients
/// outside the subset are zero.
struct SubsetFit {
    Eigen::VectorXd coeffs;
    double residual_sq = 0.0;
};
SubsetFit fit_groups(const Problem& problem, std::span<const std::size_t> groups);

// --- exact cardinality minimization -------------------------------------

struct MipOptions {
    std::size_t max_nodes = 200000;
};

/// safety * largest group modulus of the minimum-norm least-squares fit on
/// all columns.
double choose_big_M(const Problem& problem, double safety = 10.0);

/// Best-first branch and bound over group activity. A support S is feasible
/// when its least-squares fit has residual <= epsilon and every group
/// modulus <= big_M. Among minimum-cardinality feasible supports the one with
/// the smallest residual is returned.
SolveResult solve_mip(const Problem& problem, const MipOptions& options = {});

// --- l1 relaxation --------------------------------------------------------

struct L1Options {
    double tol = 1e-10;             // inner loop: relative iterate change
    std::size_t max_iter = 20000;   // inner loop iterations per penalty
    std::size_t max_bisections = 60;
    double band = 0.05;             // accept residual in [(1 - band) eps, eps]
    double activity_threshold = 1e-6;
    // Per-atom scales 1 / ||A_g||: the cost becomes sum_g ||A_g|| |c_g|.
    bool normalize_columns = true;
    // Reweighted l1: after each solve, every atom's column is rescaled by
    // (|c| + floor * max|c|) / ((1 + floor) max|c|) and the problem re-solved.
    // Zero rounds with normalize_columns off is the plain unit-scale problem.
    std::size_t reweight_rounds = 4;
    double reweight_floor = 1e-3;
};

/// Penalized form 0.5 ||t - A w||^2 + lambda cost(w) solved by accelerated
/// proximal gradient, with bisection on lambda until the residual lands in
/// the acceptance band. Returns the feasible iterate of smallest cost (of
/// the last round when reweighting).
SolveResult solve_l1(const Problem& problem, const L1Options& options = {});

/// Inner solver of solve_l1 for a fixed penalty, warm-started from `start`.
struct PenalizedSolve {
    Eigen::VectorXd coeffs;
    std::size_t iterations = 0;
    bool converged = false;
};
PenalizedSolve solve_penalized(const Problem& problem, double lambda, const Eigen::VectorXd& start,
                               const L1Options& options, double lipschitz);

/// Largest eigenvalue of A^T A.
double gram_spectral_norm(const Eigen::MatrixXd& a);

// --- Frank-Wolfe ------------------------------------------------------------

enum class StepRule { kExactLineSearch, kOpenLoop };

struct FwOptions {
    std::size_t samples_per_iter = 0;  // 0 or >= n_groups: deterministic full search
    std::size_t max_iter = 5000;
    double gap_tol = 1e-6;             // relative to ||t||^2
    std::uint64_t seed = 0;
    StepRule step = StepRule::kExactLineSearch;
    // Away steps (exact line search only): keep the iterate as a convex
    // combination of active vertices and allow moving weight off the worst one.
    bool away_steps = true;
    // Accelerated projected-gradient iterations on the active groups after
    // each step (exact line search only); 0 disables. Kept only when they
    // lower the objective.
    std::size_t correction_iters = 20;
    double activity_threshold = 1e-6;
    bool record_iterates = false;      // keep every iterate's atomic cost in `cost_trace`
};

struct FwResult {
    SolveResult result;
    std::vector<double> cost_trace;  // only with record_iterates
};

FwResult solve_fw_traced(const Problem& problem, const FwOptions& options = {});
SolveResult solve_fw(const Problem& problem, const FwOptions& options = {});

// --- support extraction -------------------------------------------------------

struct SupportFit {
    AtomicModel model;
    Eigen::VectorXd coeffs;
    double residual_sq = 0.0;
    std::vector<std::size_t> groups;
    std::size_t cardinality() const { return groups.size(); }
};

/// Keeps groups whose modulus exceeds threshold_rel times the largest and
/// refits them by least squares on the problem rows. An empty support yields
/// an offset-only fit.
SupportFit extract_support(const Problem& problem, const SolveResult& result, double threshold_rel = 1e-6);

}  // namespace volterra
