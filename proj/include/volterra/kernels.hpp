// Data-parallel numerical kernels.
//
// Every routine exists twice: `serial` is the plain reference loop and
// `parallel` distributes independent output elements over OpenMP threads.
// Each output element is accumulated in the same order by both versions, so
// the results are bitwise identical regardless of thread count.
#pragma once

#include <cstddef>
#include <limits>
#include <span>

#include <Eigen/Dense>

#include "volterra/model.hpp"

namespace volterra::kernels {

/// Describes the output columns of one atom in terms of filter responses.
/// A first-order atom uses `pole_a` only (`pole_b == kNone`).
struct AtomSource {
    static constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
    std::size_t pole_a = 0;
    std::size_t pole_b = kNone;
    double scale = 1.0;
};

namespace serial {

Eigen::MatrixXd regression_matrix(const Eigen::VectorXd& input, std::size_t memory);
Eigen::VectorXd simulate(const VolterraKernels& kernels, const Eigen::VectorXd& input);

/// A * w
Eigen::VectorXd multiply(const Eigen::MatrixXd& a, const Eigen::VectorXd& w);
/// A^T * r
Eigen::VectorXd correlate(const Eigen::MatrixXd& a, const Eigen::VectorXd& r);

/// Column j holds z_j(n) = sum_{k < min(n+1, L)} p_j^k x(n-k).
Eigen::MatrixXcd filter_responses(const Eigen::VectorXd& input, std::span<const Complex> poles,
                                  std::size_t memory);

/// Columns 2j, 2j+1 hold 2 Re(s z) and -2 Im(s z) for atom j, where z is the
/// filter response (first order) or the product of two responses (second
/// order). The final column is all ones.
Eigen::MatrixXd atom_outputs(const Eigen::MatrixXcd& responses, std::span<const AtomSource> atoms);

}  // namespace serial

namespace parallel {

Eigen::MatrixXd regression_matrix(const Eigen::VectorXd& input, std::size_t memory);
Eigen::VectorXd simulate(const VolterraKernels& kernels, const Eigen::VectorXd& input);
Eigen::VectorXd multiply(const Eigen::MatrixXd& a, const Eigen::VectorXd& w);
Eigen::VectorXd correlate(const Eigen::MatrixXd& a, const Eigen::VectorXd& r);
Eigen::MatrixXcd filter_responses(const Eigen::VectorXd& input, std::span<const Complex> poles,
                                  std::size_t memory);
Eigen::MatrixXd atom_outputs(const Eigen::MatrixXcd& responses, std::span<const AtomSource> atoms);

}  // namespace parallel

}  // namespace volterra::kernels
