#pragma once

#include <vector>

#include <Eigen/Dense>

#include "volterra/solvers.hpp"

namespace volterra::detail {

/// Euclidean norm of every column group of w.
std::vector<double> group_moduli(const Eigen::VectorXd& w, const std::vector<ColumnGroup>& groups);

/// Result skeleton with coeffs, residual, cardinality and model filled in.
SolveResult finish_result(const Problem& problem, Eigen::VectorXd w, std::string solver, double activity_threshold);

}  // namespace volterra::detail
