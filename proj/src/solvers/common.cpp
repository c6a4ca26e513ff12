#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "detail.hpp"
#include "volterra/kernels.hpp"

namespace volterra {

namespace detail {

std::vector<double> group_moduli(const Eigen::VectorXd& w, const std::vector<ColumnGroup>& groups) {
    std::vector<double> out;
    out.reserve(groups.size());
    for (const ColumnGroup& g : groups) {
        const auto i = static_cast<Eigen::Index>(g.first);
        out.push_back(g.size == 2 ? std::hypot(w(i), w(i + 1)) : std::abs(w(i)));
    }
    return out;
}

SolveResult finish_result(const Problem& problem, Eigen::VectorXd w, std::string solver, double activity_threshold) {
    SolveResult r;
    r.residual_sq = residual_sq(problem, w);
    r.cardinality = count_active(w, problem.catalog, activity_threshold);
    r.model = complex_coeffs(w, problem.catalog);
    r.coeffs = std::move(w);
    r.solver_name = std::move(solver);
    return r;
}

}  // namespace detail

void Problem::validate() const {
    if (output_dictionary.rows() != target.size()) {
        throw std::invalid_argument("output dictionary rows must match the number of observed outputs");
    }
    if (static_cast<std::size_t>(output_dictionary.cols()) != catalog.n_columns()) {
        throw std::invalid_argument("output dictionary columns must match the catalog");
    }
    if (target.size() == 0) throw std::invalid_argument("problem has no observed outputs");
    if (!(epsilon >= 0.0) || !(tau >= 0.0)) throw std::invalid_argument("epsilon and tau must be nonnegative");
}

double epsilon_from_noise(double eta_max, std::size_t n_observed, NoiseBound mode) {
    if (!(eta_max >= 0.0)) throw std::invalid_argument("eta_max must be nonnegative");
    return mode == NoiseBound::kPerSample ? static_cast<double>(n_observed) * eta_max * eta_max : eta_max * eta_max;
}

double residual_sq(const Problem& problem, const Eigen::VectorXd& w) {
    return (problem.target - kernels::parallel::multiply(problem.output_dictionary, w)).squaredNorm();
}

Eigen::VectorXd residual_gradient(const Problem& problem, const Eigen::VectorXd& w) {
    const Eigen::VectorXd r = problem.target - kernels::parallel::multiply(problem.output_dictionary, w);
    return -2.0 * kernels::parallel::correlate(problem.output_dictionary, r);
}

std::size_t count_active(const Eigen::VectorXd& w, const AtomCatalog& catalog, double threshold_rel) {
    const std::vector<double> mod = detail::group_moduli(w, column_groups(catalog));
    const double top = mod.empty() ? 0.0 : *std::max_element(mod.begin(), mod.end());
    if (top == 0.0) return 0;
    return static_cast<std::size_t>(
        std::count_if(mod.begin(), mod.end(), [&](double m) { return m > threshold_rel * top; }));
}

void group_soft_threshold(std::span<double> x, double t) {
    double norm_sq = 0.0;
    for (double v : x) norm_sq += v * v;
    const double norm = std::sqrt(norm_sq);
    const double shrink = norm > t ? 1.0 - t / norm : 0.0;
    for (double& v : x) v *= shrink;
}

double lambda_max(const Problem& problem) {
    const Eigen::VectorXd g = kernels::parallel::correlate(problem.output_dictionary, problem.target);
    const std::vector<double> mod = detail::group_moduli(g, column_groups(problem.catalog));
    return *std::max_element(mod.begin(), mod.end());
}

SubsetFit fit_groups(const Problem& problem, std::span<const std::size_t> groups) {
    const std::vector<ColumnGroup> layout = column_groups(problem.catalog);
    std::vector<Eigen::Index> cols;
    for (std::size_t g : groups) {
        for (std::size_t c = 0; c < layout.at(g).size; ++c) cols.push_back(static_cast<Eigen::Index>(layout[g].first + c));
    }
    SubsetFit fit;
    fit.coeffs = Eigen::VectorXd::Zero(problem.output_dictionary.cols());
    if (cols.empty()) {
        fit.residual_sq = problem.target.squaredNorm();
        return fit;
    }
    Eigen::MatrixXd sub(problem.output_dictionary.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = problem.output_dictionary.col(cols[i]);
    const Eigen::VectorXd x = sub.colPivHouseholderQr().solve(problem.target);
    for (std::size_t i = 0; i < cols.size(); ++i) fit.coeffs(cols[i]) = x(static_cast<Eigen::Index>(i));
    fit.residual_sq = (problem.target - sub * x).squaredNorm();
    return fit;
}

}  // namespace volterra
