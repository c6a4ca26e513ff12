#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "detail.hpp"
#include "volterra/kernels.hpp"
#include "volterra/rng.hpp"

namespace volterra {

namespace {

/// Group indices scored by the linear minimization oracle this iteration,
/// ascending so that ties resolve to the smallest catalog index.
std::vector<std::size_t> sample_groups(std::size_t n_groups, std::size_t n_samples, Rng& rng) {
    std::vector<std::size_t> idx(n_groups);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (n_samples == 0 || n_samples >= n_groups) return idx;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n_groups - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n_samples);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Euclidean projection onto {w : sum_g |w_g| <= tau}: the group moduli are
/// projected onto the l1 ball and each block keeps its direction.
void project_ball(Eigen::VectorXd& w, const std::vector<ColumnGroup>& groups, double tau) {
    std::vector<double> m(groups.size());
    double total = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        m[g] = w.segment(static_cast<Eigen::Index>(groups[g].first), static_cast<Eigen::Index>(groups[g].size)).norm();
        total += m[g];
    }
    if (total <= tau) return;
    std::vector<double> sorted = m;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0;
    double theta = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        cum += sorted[i];
        const double t = (cum - tau) / static_cast<double>(i + 1);
        if (i + 1 == sorted.size() || sorted[i + 1] <= t) {
            theta = t;
            break;
        }
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (m[g] == 0.0) continue;
        w.segment(static_cast<Eigen::Index>(groups[g].first), static_cast<Eigen::Index>(groups[g].size)) *=
            std::max(0.0, m[g] - theta) / m[g];
    }
}

/// Accelerated projected gradient on the groups already active in `w`,
/// warm-started at `w`. Returns the best iterate seen; the caller keeps it
/// only if it improves the objective.
Eigen::VectorXd correct_on_support(const Problem& problem, const std::vector<ColumnGroup>& groups,
                                   const Eigen::VectorXd& w, double lipschitz, std::size_t iters) {
    const Eigen::MatrixXd& a = problem.output_dictionary;
    std::vector<Eigen::Index> cols;
    std::vector<ColumnGroup> local;
    for (const ColumnGroup& g : groups) {
        const auto first = static_cast<Eigen::Index>(g.first);
        const auto size = static_cast<Eigen::Index>(g.size);
        if (w.segment(first, size).norm() == 0.0) continue;
        local.push_back({cols.size(), g.size});
        for (Eigen::Index k = 0; k < size; ++k) cols.push_back(first + k);
    }
    const Eigen::MatrixXd as = a(Eigen::all, cols);
    Eigen::VectorXd x = w(cols);
    Eigen::VectorXd y = x;
    Eigen::VectorXd best = x;
    double best_obj = (problem.target - as * x).squaredNorm();
    double momentum = 1.0;
    for (std::size_t it = 0; it < iters; ++it) {
        Eigen::VectorXd next = y + (2.0 / lipschitz) * (as.transpose() * (problem.target - as * y));
        project_ball(next, local, problem.tau);
        const double obj = (problem.target - as * next).squaredNorm();
        if (obj < best_obj) {
            best_obj = obj;
            best = next;
        }
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const bool restart = (y - next).dot(next - x) > 0.0;
        y = restart ? next : Eigen::VectorXd(next + ((momentum - 1.0) / next_momentum) * (next - x));
        momentum = restart ? 1.0 : next_momentum;
        x = std::move(next);
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(w.size());
    out(cols) = best;
    return out;
}

}  // namespace

FwResult solve_fw_traced(const Problem& problem, const FwOptions& options) {
    problem.validate();
    const Eigen::MatrixXd& a = problem.output_dictionary;
    const std::vector<ColumnGroup> groups = column_groups(problem.catalog);
    const double tau = problem.tau;
    const double target_sq = problem.target.squaredNorm();
    const bool away = options.away_steps && options.step == StepRule::kExactLineSearch;
    const bool correct = options.correction_iters > 0 && options.step == StepRule::kExactLineSearch;
    // Step bound for the corrective steps: the Lipschitz constant of the
    // gradient of ||t - A w||^2 on all columns bounds every sub-block.
    const double lipschitz = correct ? 2.0 * gram_spectral_norm(a) : 0.0;

    FwResult out;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(a.cols());
    Eigen::VectorXd aw = Eigen::VectorXd::Zero(a.rows());
    Eigen::VectorXd r = problem.target;
    std::vector<double> trace{r.squaredNorm()};
    if (options.record_iterates) out.cost_trace.push_back(0.0);

    const auto block = [&](const Eigen::VectorXd& x, std::size_t g) {
        return x.segment(static_cast<Eigen::Index>(groups[g].first), static_cast<Eigen::Index>(groups[g].size));
    };
    const auto block_image = [&](const Eigen::VectorXd& x, std::size_t g) -> Eigen::VectorXd {
        return a.middleCols(static_cast<Eigen::Index>(groups[g].first), static_cast<Eigen::Index>(groups[g].size)) *
               block(x, g);
    };

    Rng rng(options.seed);
    bool converged = tau == 0.0;
    std::size_t iter = 0;
    for (; iter < options.max_iter && !converged; ++iter) {
        const std::vector<std::size_t> sampled = sample_groups(groups.size(), options.samples_per_iter, rng);

        // Linear minimization oracle over the sampled vertices.
        std::size_t best = sampled.front();
        double best_score = -1.0;
        double best_u = 0.0;
        double best_v = 0.0;
        for (std::size_t g : sampled) {
            const ColumnGroup& grp = groups[g];
            const auto c = static_cast<Eigen::Index>(grp.first);
            const double u = a.col(c).dot(r);
            const double v = grp.size == 2 ? a.col(c + 1).dot(r) : 0.0;
            const double score = std::hypot(u, v);
            if (score > best_score) {
                best = g;
                best_score = score;
                best_u = u;
                best_v = v;
            }
        }
        if (best_score <= 0.0) {
            converged = true;
            break;
        }

        const ColumnGroup& grp = groups[best];
        const auto c = static_cast<Eigen::Index>(grp.first);
        Eigen::VectorXd s = Eigen::VectorXd::Zero(a.cols());
        s(c) = tau * best_u / best_score;
        if (grp.size == 2) s(c + 1) = tau * best_v / best_score;
        Eigen::VectorXd as = s(c) * a.col(c);
        if (grp.size == 2) as += s(c + 1) * a.col(c + 1);

        // <-grad f, s - w> with grad f = -2 A^T r.
        const Eigen::VectorXd d = as - aw;
        const double gap = 2.0 * r.dot(d);
        if (gap <= options.gap_tol * target_sq) {
            converged = true;
            break;
        }

        // The iterate is the convex combination of the vertices
        // tau * w_g / |w_g| with weights |w_g| / tau, plus the origin with the
        // remaining weight. An away step moves weight off the vertex the
        // gradient most wants to leave.
        bool took_away = false;
        if (away) {
            const double cost = atomic_l1_cost(w, problem.catalog);
            std::size_t worst = groups.size();  // origin
            double worst_weight = 1.0 - cost / tau;
            Eigen::VectorXd worst_image = Eigen::VectorXd::Zero(a.rows());
            double away_gap = worst_weight > 0.0 ? 2.0 * r.dot(aw) : -1.0;
            for (std::size_t g = 0; g < groups.size(); ++g) {
                const double m = block(w, g).norm();
                if (m == 0.0) continue;
                Eigen::VectorXd img = block_image(w, g) * (tau / m);
                const double g_gap = 2.0 * r.dot(aw - img);
                if (g_gap > away_gap) {
                    away_gap = g_gap;
                    worst = g;
                    worst_weight = m / tau;
                    worst_image = std::move(img);
                }
            }
            if (away_gap > gap && worst_weight < 1.0) {
                const double gamma_max = worst_weight / (1.0 - worst_weight);
                const Eigen::VectorXd dir = aw - worst_image;
                const double dd = dir.squaredNorm();
                const double gamma = dd > 0.0 ? std::clamp(r.dot(dir) / dd, 0.0, gamma_max) : 0.0;
                if (worst < groups.size()) {
                    const Eigen::VectorXd wb = block(w, worst);
                    const double m = wb.norm();
                    const double shrunk = gamma >= gamma_max ? 0.0 : std::max(0.0, (1.0 + gamma) * m - gamma * tau);
                    w *= 1.0 + gamma;
                    w.segment(static_cast<Eigen::Index>(groups[worst].first), wb.size()) = wb * (shrunk / m);
                } else {
                    w *= 1.0 + gamma;
                }
                aw = a * w;
                took_away = true;
            }
        }

        if (!took_away) {
            double gamma = 0.0;
            if (options.step == StepRule::kExactLineSearch) {
                const double dd = d.squaredNorm();
                gamma = dd > 0.0 ? std::clamp(r.dot(d) / dd, 0.0, 1.0) : 0.0;
            } else {
                gamma = 2.0 / (static_cast<double>(iter) + 2.0);
            }
            w = (1.0 - gamma) * w + gamma * s;
            aw = (1.0 - gamma) * aw + gamma * as;
        }
        r = problem.target - aw;
        if (correct && lipschitz > 0.0) {
            Eigen::VectorXd wc = correct_on_support(problem, groups, w, lipschitz, options.correction_iters);
            Eigen::VectorXd awc = a * wc;
            if ((problem.target - awc).squaredNorm() < r.squaredNorm()) {
                w = std::move(wc);
                aw = std::move(awc);
                r = problem.target - aw;
            }
        }
        trace.push_back(r.squaredNorm());
        if (options.record_iterates) out.cost_trace.push_back(atomic_l1_cost(w, problem.catalog));
    }

    out.result = detail::finish_result(problem, std::move(w), "fw", options.activity_threshold);
    out.result.objective_trace = std::move(trace);
    out.result.converged = converged;
    out.result.seed = options.seed;
    out.result.tau = tau;
    out.result.iterations = iter;
    return out;
}

SolveResult solve_fw(const Problem& problem, const FwOptions& options) {
    return solve_fw_traced(problem, options).result;
}

}  // namespace volterra
