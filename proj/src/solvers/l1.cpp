#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "detail.hpp"
#include "volterra/kernels.hpp"

namespace volterra {

namespace {

void prox(Eigen::VectorXd& x, const std::vector<ColumnGroup>& groups, double t) {
    for (const ColumnGroup& g : groups) {
        group_soft_threshold(std::span<double>(x.data() + g.first, g.size), t);
    }
}

double penalized_objective(const Problem& problem, const Eigen::VectorXd& w, double lambda) {
    return 0.5 * residual_sq(problem, w) + lambda * atomic_l1_cost(w, problem.catalog);
}

}  // namespace

double gram_spectral_norm(const Eigen::MatrixXd& a) {
    if (a.size() == 0) return 0.0;
    const Eigen::MatrixXd gram = a.rows() <= a.cols() ? Eigen::MatrixXd(a * a.transpose())
                                                      : Eigen::MatrixXd(a.transpose() * a);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().maxCoeff();
}

PenalizedSolve solve_penalized(const Problem& problem, double lambda, const Eigen::VectorXd& start,
                               const L1Options& options, double lipschitz) {
    const Eigen::MatrixXd& a = problem.output_dictionary;
    const std::vector<ColumnGroup> groups = column_groups(problem.catalog);
    const std::vector<bool> active = problem.catalog.active_columns();
    const double step = 1.0 / lipschitz;

    PenalizedSolve out;
    Eigen::VectorXd x = start;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (!active[static_cast<std::size_t>(j)]) x(j) = 0.0;
    }
    Eigen::VectorXd ax = kernels::parallel::multiply(a, x);
    Eigen::VectorXd y = x;
    Eigen::VectorXd ay = ax;
    double momentum = 1.0;

    for (out.iterations = 1; out.iterations <= options.max_iter; ++out.iterations) {
        const Eigen::VectorXd grad = kernels::parallel::correlate(a, ay - problem.target);
        Eigen::VectorXd next = y - step * grad;
        prox(next, groups, step * lambda);
        const Eigen::VectorXd a_next = kernels::parallel::multiply(a, next);

        const Eigen::VectorXd delta = next - x;
        const double change = delta.norm();
        // Adaptive restart when the momentum direction opposes progress.
        const bool restart = (y - next).dot(delta) > 0.0;
        const double next_momentum = restart ? 1.0 : 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta = restart ? 0.0 : (momentum - 1.0) / next_momentum;
        y = next + beta * delta;
        ay = a_next + beta * (a_next - ax);
        x = next;
        ax = a_next;
        momentum = next_momentum;

        if (change <= options.tol * std::max(1.0, x.norm())) {
            out.converged = true;
            break;
        }
    }
    out.iterations = std::min(out.iterations, options.max_iter);
    out.coeffs = std::move(x);
    return out;
}

namespace {

SolveResult solve_l1_once(const Problem& problem, const L1Options& options) {
    const double eps = problem.epsilon;
    if (!(eps > 0.0)) throw std::invalid_argument("the l1 solver needs epsilon > 0");
    const auto n_cols = problem.output_dictionary.cols();
    const double target_sq = problem.target.squaredNorm();

    if (target_sq <= eps) {
        SolveResult r = detail::finish_result(problem, Eigen::VectorXd::Zero(n_cols), "l1", options.activity_threshold);
        r.converged = true;
        r.lambda = lambda_max(problem);
        r.objective_trace.push_back(0.0);
        return r;
    }

    const double lipschitz = gram_spectral_norm(problem.output_dictionary);
    const double lam_hi_init = lambda_max(problem);

    struct Candidate {
        Eigen::VectorXd w;
        double lambda = 0.0;
        double cost = std::numeric_limits<double>::infinity();
        bool converged = false;
    };
    std::optional<Candidate> best;
    std::vector<double> trace;
    std::size_t total_iterations = 0;

    const auto evaluate = [&](double lambda, const Eigen::VectorXd& start) {
        PenalizedSolve s = solve_penalized(problem, lambda, start, options, lipschitz);
        total_iterations += s.iterations;
        trace.push_back(penalized_objective(problem, s.coeffs, lambda));
        const double res = residual_sq(problem, s.coeffs);
        if (res <= eps) {
            const double cost = atomic_l1_cost(s.coeffs, problem.catalog);
            if (!best || cost < best->cost) best = Candidate{s.coeffs, lambda, cost, s.converged};
        }
        return std::pair{res, std::move(s)};
    };

    // Walk the penalty down by decades until the residual is feasible.
    double hi = lam_hi_init;
    double lo = hi;
    Eigen::VectorXd warm = Eigen::VectorXd::Zero(n_cols);
    Eigen::VectorXd lo_w;
    bool feasible = false;
    for (int decade = 1; decade <= 16; ++decade) {
        lo = lam_hi_init * std::pow(10.0, -decade);
        auto [res, s] = evaluate(lo, warm);
        warm = s.coeffs;
        if (res <= eps) {
            feasible = true;
            lo_w = std::move(s.coeffs);
            break;
        }
        hi = lo;
    }
    if (!feasible) {
        const double floor = fit_groups(problem, [&] {
                                 std::vector<std::size_t> all(problem.catalog.n_groups());
                                 for (std::size_t g = 0; g < all.size(); ++g) all[g] = g;
                                 return all;
                             }())
                                 .residual_sq;
        if (floor > eps) {
            throw InfeasibleError("least squares on every atom leaves residual " + std::to_string(floor) +
                                      " above epsilon " + std::to_string(eps),
                                  floor);
        }
        // Feasible in principle but the penalty path never got there within
        // the iteration budget: hand back the last iterate, unconverged.
        SolveResult r = detail::finish_result(problem, warm, "l1", options.activity_threshold);
        r.lambda = lo;
        r.converged = false;
        r.objective_trace = std::move(trace);
        r.iterations = total_iterations;
        return r;
    }

    // Geometric bisection between an infeasible (hi) and a feasible (lo) penalty.
    for (std::size_t step = 0; step < options.max_bisections; ++step) {
        if (best && residual_sq(problem, best->w) >= (1.0 - options.band) * eps) break;
        if (hi / lo < 1.0 + 1e-9) break;
        const double mid = std::sqrt(lo * hi);
        auto [res, s] = evaluate(mid, lo_w);
        if (res <= eps) {
            lo = mid;
            lo_w = std::move(s.coeffs);
        } else {
            hi = mid;
        }
    }

    SolveResult r = detail::finish_result(problem, best->w, "l1", options.activity_threshold);
    r.lambda = best->lambda;
    r.converged = best->converged;
    r.objective_trace = std::move(trace);
    r.iterations = total_iterations;
    return r;
}

}  // namespace

SolveResult solve_l1(const Problem& problem, const L1Options& options) {
    problem.validate();
    if (!options.normalize_columns && options.reweight_rounds == 0) return solve_l1_once(problem, options);

    // A weighted cost sum_g |c_g| / s_g is the plain cost on columns scaled
    // by s_g, so both options are solved as rescaled problems.
    const std::vector<ColumnGroup> groups = column_groups(problem.catalog);
    std::vector<double> base(groups.size(), 1.0);
    if (options.normalize_columns) {
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const double norm = problem.output_dictionary
                                    .middleCols(static_cast<Eigen::Index>(groups[g].first),
                                                static_cast<Eigen::Index>(groups[g].size))
                                    .norm();
            if (norm > 0.0) base[g] = 1.0 / norm;
        }
    }

    Problem scaled = problem;
    std::vector<double> trace;
    std::size_t iterations = 0;
    SolveResult r;
    std::vector<double> weight(groups.size(), 1.0);
    for (std::size_t round = 0; round <= options.reweight_rounds; ++round) {
        Eigen::VectorXd col_scale = Eigen::VectorXd::Zero(problem.output_dictionary.cols());
        for (std::size_t g = 0; g < groups.size(); ++g) {
            for (std::size_t c = 0; c < groups[g].size; ++c) {
                col_scale(static_cast<Eigen::Index>(groups[g].first + c)) = base[g] * weight[g];
            }
        }
        scaled.output_dictionary = problem.output_dictionary * col_scale.asDiagonal();
        const SolveResult inner = solve_l1_once(scaled, options);
        trace.insert(trace.end(), inner.objective_trace.begin(), inner.objective_trace.end());
        iterations += inner.iterations;
        r = detail::finish_result(problem, inner.coeffs.cwiseProduct(col_scale), "l1", options.activity_threshold);
        r.converged = inner.converged;
        r.lambda = inner.lambda;

        // Next round's weights from the moduli in normalized coordinates.
        std::vector<double> mod = detail::group_moduli(r.coeffs, groups);
        for (std::size_t g = 0; g < groups.size(); ++g) mod[g] /= base[g];
        const double top = *std::max_element(mod.begin(), mod.end());
        if (top == 0.0) break;
        const double floor = options.reweight_floor * top;
        for (std::size_t g = 0; g < groups.size(); ++g) weight[g] = (mod[g] + floor) / (top + floor);
    }
    r.objective_trace = std::move(trace);
    r.iterations = iterations;
    return r;
}

}  // namespace volterra
