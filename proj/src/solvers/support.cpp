#include <algorithm>
#include <stdexcept>

#include "detail.hpp"

namespace volterra {

SupportFit extract_support(const Problem& problem, const SolveResult& result, double threshold_rel) {
    if (!(threshold_rel > 0.0 && threshold_rel < 1.0)) {
        throw std::invalid_argument("support threshold must lie in (0, 1)");
    }
    problem.validate();
    const std::vector<ColumnGroup> layout = column_groups(problem.catalog);
    if (static_cast<std::size_t>(result.coeffs.size()) != problem.catalog.n_columns()) {
        throw std::invalid_argument("result coefficients do not match the problem catalog");
    }
    const std::vector<double> mod = detail::group_moduli(result.coeffs, layout);
    const double top = *std::max_element(mod.begin(), mod.end());

    SupportFit out;
    if (top > 0.0) {
        for (std::size_t g = 0; g < mod.size(); ++g) {
            if (mod[g] > threshold_rel * top) out.groups.push_back(g);
        }
    }
    std::vector<std::size_t> fit_set = out.groups;
    if (fit_set.empty()) fit_set.push_back(problem.catalog.constant_group());
    SubsetFit fit = fit_groups(problem, fit_set);
    out.coeffs = std::move(fit.coeffs);
    out.residual_sq = fit.residual_sq;
    out.model = complex_coeffs(out.coeffs, problem.catalog);
    return out;
}

}  // namespace volterra
