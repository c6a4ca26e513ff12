#include "volterra/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <tuple>

#include "volterra/kernels.hpp"

namespace volterra {

namespace {

void check_pole(Complex z) {
    const double r = std::abs(z);
    if (!std::isfinite(r) || r <= 0.0 || r >= 1.0) {
        throw std::invalid_argument("pole " + std::to_string(z.real()) + (z.imag() < 0 ? "" : "+") +
                                    std::to_string(z.imag()) + "j must satisfy 0 < |p| < 1");
    }
}

void check_scale(double s) {
    if (!std::isfinite(s) || s == 0.0) throw std::invalid_argument("atom scale must be finite and nonzero");
}

void check_memory(std::size_t memory) {
    if (memory == 0) throw std::invalid_argument("kernel memory L must be at least 1");
}

}  // namespace

Pole::Pole(double re, double im) : Pole(Complex(re, im)) {}

Pole::Pole(Complex z) : z_(z) { check_pole(z); }

bool canonicalize_pair(Pole& p1, Pole& p2) {
    const auto key = [](const Pole& a, const Pole& b) { return std::tuple(a.im(), b.im(), a.re(), b.re()); };
    const Pole c1 = p1.conj();
    const Pole c2 = p2.conj();
    if (key(c1, c2) > key(p1, p2)) {
        p1 = c1;
        p2 = c2;
        return true;
    }
    return false;
}

void AtomicModel::add(const FirstOrderAtom& atom, Complex coeff) {
    check_scale(atom.scale);
    for (auto& term : first_order) {
        const Complex ratio = atom.scale / term.atom.scale;
        if (term.atom.pole == atom.pole) {
            term.coeff += coeff * ratio;
            return;
        }
        if (term.atom.pole == atom.pole.conj()) {
            term.coeff += std::conj(coeff) * ratio;
            return;
        }
    }
    first_order.push_back({atom, coeff});
}

void AtomicModel::add(const SecondOrderAtom& atom, Complex coeff) {
    check_scale(atom.scale);
    for (auto& term : second_order) {
        const Complex ratio = atom.scale / term.atom.scale;
        if (term.atom.pole1 == atom.pole1 && term.atom.pole2 == atom.pole2) {
            term.coeff += coeff * ratio;
            return;
        }
        if (term.atom.pole1 == atom.pole1.conj() && term.atom.pole2 == atom.pole2.conj()) {
            term.coeff += std::conj(coeff) * ratio;
            return;
        }
    }
    second_order.push_back({atom, coeff});
}

double AtomicModel::max_pole_modulus() const {
    double rho = 0.0;
    for (const auto& t : first_order) rho = std::max(rho, t.atom.pole.modulus());
    for (const auto& t : second_order) {
        rho = std::max({rho, t.atom.pole1.modulus(), t.atom.pole2.modulus()});
    }
    return rho;
}

VolterraKernels::VolterraKernels(double h0_, Eigen::VectorXd h1_, Eigen::MatrixXd h2_)
    : h0(h0_), h1(std::move(h1_)), h2(std::move(h2_)) {
    check_memory(static_cast<std::size_t>(h1.size()));
    if (h2.rows() != h1.size() || h2.cols() != h1.size()) {
        throw std::invalid_argument("quadratic kernel must be L x L with L = size of linear kernel");
    }
    if (!std::isfinite(h0) || !h1.allFinite() || !h2.allFinite()) {
        throw std::invalid_argument("kernel entries must be finite");
    }
}

VolterraKernels::VolterraKernels(std::size_t memory)
    : VolterraKernels(0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(memory)),
                      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(memory), static_cast<Eigen::Index>(memory))) {}

Eigen::VectorXcd eval_first_order_kernel(const FirstOrderAtom& atom, std::size_t memory) {
    check_memory(memory);
    check_scale(atom.scale);
    Eigen::VectorXcd out(static_cast<Eigen::Index>(memory));
    Complex power = atom.scale;
    for (Eigen::Index k = 0; k < out.size(); ++k) {
        out(k) = power;
        power *= atom.pole.value();
    }
    return out;
}

Eigen::MatrixXcd eval_second_order_kernel(const SecondOrderAtom& atom, std::size_t memory) {
    check_memory(memory);
    check_scale(atom.scale);
    const Eigen::VectorXcd a = eval_first_order_kernel({atom.pole1, 1.0}, memory);
    const Eigen::VectorXcd b = eval_first_order_kernel({atom.pole2, 1.0}, memory);
    return atom.scale * (a * b.transpose());
}

VolterraKernels eval_kernels(const AtomicModel& model, std::size_t memory) {
    VolterraKernels k(memory);
    k.h0 = model.h0;
    for (const auto& term : model.first_order) {
        k.h1 += 2.0 * (term.coeff * eval_first_order_kernel(term.atom, memory).array()).real().matrix();
    }
    for (const auto& term : model.second_order) {
        k.h2 += 2.0 * (term.coeff * eval_second_order_kernel(term.atom, memory).array()).real().matrix();
    }
    return k;
}

Eigen::VectorXd simulate(const VolterraKernels& kernels, const Eigen::VectorXd& input) {
    return kernels::parallel::simulate(kernels, input);
}

Eigen::MatrixXd regression_matrix(const Eigen::VectorXd& input, std::size_t memory) {
    check_memory(memory);
    return kernels::parallel::regression_matrix(input, memory);
}

Eigen::VectorXd stack(const VolterraKernels& kernels) {
    const auto mem = static_cast<Eigen::Index>(kernels.memory());
    Eigen::VectorXd out(static_cast<Eigen::Index>(kernels.stacked_size()));
    out(0) = kernels.h0;
    out.segment(1, mem) = kernels.h1;
    for (Eigen::Index k1 = 0; k1 < mem; ++k1) {
        for (Eigen::Index k2 = 0; k2 < mem; ++k2) out(1 + mem + k1 * mem + k2) = kernels.h2(k1, k2);
    }
    return out;
}

VolterraKernels unstack(const Eigen::VectorXd& stacked, std::size_t memory) {
    check_memory(memory);
    if (static_cast<std::size_t>(stacked.size()) != stacked_size(memory)) {
        throw std::invalid_argument("stacked kernel length must be 1 + L + L^2");
    }
    const auto mem = static_cast<Eigen::Index>(memory);
    Eigen::MatrixXd h2(mem, mem);
    for (Eigen::Index k1 = 0; k1 < mem; ++k1) {
        for (Eigen::Index k2 = 0; k2 < mem; ++k2) h2(k1, k2) = stacked(1 + mem + k1 * mem + k2);
    }
    return {stacked(0), stacked.segment(1, mem), std::move(h2)};
}

std::size_t memory_for_decay(double max_modulus, double tol) {
    if (!(max_modulus >= 0.0 && max_modulus < 1.0)) throw std::invalid_argument("modulus must lie in [0, 1)");
    if (!(tol > 0.0 && tol < 1.0)) throw std::invalid_argument("decay tolerance must lie in (0, 1)");
    if (max_modulus == 0.0) return 1;
    auto mem = static_cast<std::size_t>(std::ceil(std::log(tol) / std::log(max_modulus)));
    // Guard against ceil landing exactly on the boundary.
    while (std::pow(max_modulus, static_cast<double>(mem)) >= tol) ++mem;
    return std::max<std::size_t>(mem, 1);
}

}  // namespace volterra
