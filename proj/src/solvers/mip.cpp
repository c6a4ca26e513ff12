#include <algorithm>
#include <queue>
#include <string>

#include "detail.hpp"

namespace volterra {

namespace {

enum class Activity : signed char { kOut = -1, kFree = 0, kIn = 1 };

struct Node {
    std::vector<Activity> state;
    std::size_t n_in = 0;
    double relaxed_residual = 0.0;  // LS residual with every non-excluded group active
};

struct Incumbent {
    std::vector<std::size_t> support;
    SubsetFit fit;
};

std::vector<std::size_t> members(const std::vector<Activity>& state, bool include_free) {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < state.size(); ++g) {
        if (state[g] == Activity::kIn || (include_free && state[g] == Activity::kFree)) out.push_back(g);
    }
    return out;
}

}  // namespace

double choose_big_M(const Problem& problem, double safety) {
    if (!(safety >= 1.0)) throw std::invalid_argument("big-M safety factor must be >= 1");
    problem.validate();
    const Eigen::VectorXd dense = problem.output_dictionary.completeOrthogonalDecomposition().solve(problem.target);
    const std::vector<double> mod = detail::group_moduli(dense, column_groups(problem.catalog));
    return safety * *std::max_element(mod.begin(), mod.end());
}

SolveResult solve_mip(const Problem& problem, const MipOptions& options) {
    problem.validate();
    const std::vector<ColumnGroup> layout = column_groups(problem.catalog);
    const std::size_t n_groups = layout.size();
    const double eps = problem.epsilon;
    const double big_m = problem.big_M > 0.0 ? problem.big_M : choose_big_M(problem, 10.0);

    // Branching order: largest modulus in the dense fit first.
    const Eigen::VectorXd dense = problem.output_dictionary.completeOrthogonalDecomposition().solve(problem.target);
    const std::vector<double> dense_mod = detail::group_moduli(dense, layout);
    std::vector<std::size_t> order(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) order[g] = g;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dense_mod[a] > dense_mod[b]; });

    std::optional<Incumbent> best;
    std::size_t nodes = 0;

    const auto within_bound = [&](const SubsetFit& fit) {
        const std::vector<double> mod = detail::group_moduli(fit.coeffs, layout);
        return std::all_of(mod.begin(), mod.end(), [&](double m) { return m <= big_m; });
    };
    const auto consider = [&](const std::vector<std::size_t>& support, const SubsetFit& fit) {
        if (fit.residual_sq > eps || !within_bound(fit)) return;
        if (!best || support.size() < best->support.size() ||
            (support.size() == best->support.size() && fit.residual_sq < best->fit.residual_sq)) {
            best = Incumbent{support, fit};
        }
    };
    // A node still matters if some strict superset of its "in" set could beat
    // the incumbent: such supports have at least n_in + 1 groups and residual
    // at least relaxed_residual.
    const auto promising = [&](const Node& node) {
        if (node.relaxed_residual > eps) return false;
        if (std::find(node.state.begin(), node.state.end(), Activity::kFree) == node.state.end()) return false;
        if (!best) return true;
        const std::size_t card = node.n_in + 1;
        return card < best->support.size() ||
               (card == best->support.size() && node.relaxed_residual < best->fit.residual_sq);
    };
    const auto make_result = [&](const Incumbent& inc, bool converged) {
        SolveResult r = detail::finish_result(problem, inc.fit.coeffs, "mip", 0.0);
        r.cardinality = inc.support.size();
        r.converged = converged;
        r.iterations = nodes;
        r.objective_trace.push_back(static_cast<double>(inc.support.size()));
        return r;
    };

    const auto key_less = [](const Node& a, const Node& b) {
        // priority_queue pops the largest; invert for best-first
        if (a.n_in != b.n_in) return a.n_in > b.n_in;
        return a.relaxed_residual > b.relaxed_residual;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(key_less)> open(key_less);

    Node root{std::vector<Activity>(n_groups, Activity::kFree), 0, 0.0};
    {
        const std::vector<std::size_t> all = members(root.state, true);
        root.relaxed_residual = fit_groups(problem, all).residual_sq;
        ++nodes;
        if (root.relaxed_residual > eps) {
            throw InfeasibleError("least squares on every atom leaves residual " + std::to_string(root.relaxed_residual) +
                                      " above epsilon " + std::to_string(eps),
                                  root.relaxed_residual);
        }
        consider({}, fit_groups(problem, std::vector<std::size_t>{}));
    }
    if (promising(root)) open.push(std::move(root));

    while (!open.empty()) {
        Node node = open.top();
        open.pop();
        if (!promising(node)) continue;

        const auto it = std::find_if(order.begin(), order.end(),
                                     [&](std::size_t g) { return node.state[g] == Activity::kFree; });
        const std::size_t branch = *it;

        if (nodes + 2 > options.max_nodes) {
            std::optional<SolveResult> inc;
            if (best) inc = make_result(*best, false);
            throw NodeBudgetExceeded("branch and bound exhausted its budget of " + std::to_string(options.max_nodes) +
                                         " nodes",
                                     std::move(inc));
        }

        Node with = node;
        with.state[branch] = Activity::kIn;
        with.n_in += 1;
        const std::vector<std::size_t> support = members(with.state, false);
        consider(support, fit_groups(problem, support));
        ++nodes;
        if (promising(with)) open.push(std::move(with));

        Node without = std::move(node);
        without.state[branch] = Activity::kOut;
        without.relaxed_residual = fit_groups(problem, members(without.state, true)).residual_sq;
        ++nodes;
        if (promising(without)) open.push(std::move(without));
    }

    if (!best) {
        // Every support either misses epsilon or breaks the coefficient bound.
        throw InfeasibleError("no support satisfies both epsilon and |c| <= M = " + std::to_string(big_m),
                              fit_groups(problem, members(std::vector<Activity>(n_groups, Activity::kFree), true))
                                  .residual_sq);
    }
    return make_result(*best, true);
}

}  // namespace volterra
