// Truncated second-order Volterra systems built from damped complex
// exponentials.
//
//   y(n) = h0 + sum_k1 h1(k1) x(n-k1) + sum_k1 sum_k2 H2(k1,k2) x(n-k1) x(n-k2)
//
// with k1, k2 in [0, L). Kernels are sums of conjugate-paired atoms
//
//   h1(k)      = sum_i 2 Re(c_i  alpha_i p_i^k)
//   H2(k1, k2) = sum_i 2 Re(c_i  beta_i  p1_i^k1 p2_i^k2)
//
// Exponents start at zero: the scale absorbs the extra power of the pole that
// a k-1 exponent would introduce, and p^0 stays defined for every pole.
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace volterra {

using Complex = std::complex<double>;

/// A pole strictly inside the punctured unit disk, 0 < |p| < 1.
class Pole {
public:
    Pole(double re, double im);
    explicit Pole(Complex z);

    Complex value() const { return z_; }
    double re() const { return z_.real(); }
    double im() const { return z_.imag(); }
    double modulus() const { return std::abs(z_); }
    bool is_real() const { return z_.imag() == 0.0; }

    Pole conj() const { return Pole(std::conj(z_)); }
    /// Representative with Im >= 0.
    Pole upper() const { return z_.imag() < 0.0 ? conj() : *this; }

    friend bool operator==(const Pole& a, const Pole& b) { return a.z_ == b.z_; }

private:
    Complex z_;
};

struct FirstOrderAtom {
    Pole pole;
    double scale = 1.0;
};

struct SecondOrderAtom {
    Pole pole1;
    Pole pole2;
    double scale = 1.0;
};

struct FirstOrderTerm {
    FirstOrderAtom atom;
    Complex coeff;
};

struct SecondOrderTerm {
    SecondOrderAtom atom;
    Complex coeff;
};

/// Sparse exponential representation of a Volterra system. Every listed term
/// stands for itself plus its conjugate partner, so the kernels are real.
struct AtomicModel {
    double h0 = 0.0;
    std::vector<FirstOrderTerm> first_order;
    std::vector<SecondOrderTerm> second_order;

    /// Adds a term, merging it into an existing term whose pole tuple is equal
    /// or conjugate-equal (coefficients are rescaled to the existing atom).
    void add(const FirstOrderAtom& atom, Complex coeff);
    void add(const SecondOrderAtom& atom, Complex coeff);

    std::size_t size() const { return first_order.size() + second_order.size(); }
    /// Largest pole modulus over all terms, 0 when there are none.
    double max_pole_modulus() const;
};

/// Canonical orbit representative of a second-order pole pair: the element of
/// {(p1, p2), (conj p1, conj p2)} that is lexicographically larger in
/// (Im p1, Im p2, Re p1, Re p2). Returns true if the pair was conjugated.
bool canonicalize_pair(Pole& p1, Pole& p2);

/// Dense truncated kernels (h0, h1 in R^L, H2 in R^{LxL}).
struct VolterraKernels {
    double h0 = 0.0;
    Eigen::VectorXd h1;
    Eigen::MatrixXd h2;

    VolterraKernels() = default;
    VolterraKernels(double h0, Eigen::VectorXd h1, Eigen::MatrixXd h2);
    explicit VolterraKernels(std::size_t memory);

    std::size_t memory() const { return static_cast<std::size_t>(h1.size()); }
    std::size_t stacked_size() const { return 1 + memory() + memory() * memory(); }
};

inline std::size_t stacked_size(std::size_t memory) { return 1 + memory + memory * memory; }

/// alpha * p^k for k = 0..L-1.
Eigen::VectorXcd eval_first_order_kernel(const FirstOrderAtom& atom, std::size_t memory);

/// beta * p1^k1 * p2^k2, indexed (k1, k2).
Eigen::MatrixXcd eval_second_order_kernel(const SecondOrderAtom& atom, std::size_t memory);

VolterraKernels eval_kernels(const AtomicModel& model, std::size_t memory);

/// Time-domain evaluation with zero prehistory (x(m) = 0 for m < 0).
Eigen::VectorXd simulate(const VolterraKernels& kernels, const Eigen::VectorXd& input);

/// Rows [1, x1(n)^T, x1(n)^T (x) x1(n)^T] with x1(n) = [x(n), ..., x(n-L+1)].
Eigen::MatrixXd regression_matrix(const Eigen::VectorXd& input, std::size_t memory);

/// [h0; h1; vec(H2)] with vec row-major over (k1, k2), k1 outer, matching the
/// Kronecker column order of regression_matrix.
Eigen::VectorXd stack(const VolterraKernels& kernels);
VolterraKernels unstack(const Eigen::VectorXd& stacked, std::size_t memory);

/// Smallest L with rho^L < tol; the truncation rule for "infinite" responses.
std::size_t memory_for_decay(double max_modulus, double tol = 1e-6);

}  // namespace volterra
