#include "volterra/kernels.hpp"

namespace volterra::kernels::serial {

Eigen::MatrixXd regression_matrix(const Eigen::VectorXd& input, std::size_t memory) {
    const auto n_samples = static_cast<Eigen::Index>(input.size());
    const auto mem = static_cast<Eigen::Index>(memory);
    Eigen::MatrixXd x(n_samples, static_cast<Eigen::Index>(stacked_size(memory)));
    for (Eigen::Index n = 0; n < n_samples; ++n) {
        x(n, 0) = 1.0;
        for (Eigen::Index k1 = 0; k1 < mem; ++k1) {
            const double a = n - k1 >= 0 ? input(n - k1) : 0.0;
            x(n, 1 + k1) = a;
            for (Eigen::Index k2 = 0; k2 < mem; ++k2) {
                const double b = n - k2 >= 0 ? input(n - k2) : 0.0;
                x(n, 1 + mem + k1 * mem + k2) = a * b;
            }
        }
    }
    return x;
}

Eigen::VectorXd simulate(const VolterraKernels& kernels, const Eigen::VectorXd& input) {
    const auto n_samples = static_cast<Eigen::Index>(input.size());
    const auto mem = static_cast<Eigen::Index>(kernels.memory());
    Eigen::VectorXd y(n_samples);
    for (Eigen::Index n = 0; n < n_samples; ++n) {
        const Eigen::Index reach = std::min(mem, n + 1);
        double acc = kernels.h0;
        for (Eigen::Index k1 = 0; k1 < reach; ++k1) acc += kernels.h1(k1) * input(n - k1);
        for (Eigen::Index k1 = 0; k1 < reach; ++k1) {
            double row = 0.0;
            for (Eigen::Index k2 = 0; k2 < reach; ++k2) row += kernels.h2(k1, k2) * input(n - k2);
            acc += row * input(n - k1);
        }
        y(n) = acc;
    }
    return y;
}

Eigen::VectorXd multiply(const Eigen::MatrixXd& a, const Eigen::VectorXd& w) {
    Eigen::VectorXd out(a.rows());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < a.cols(); ++j) acc += a(i, j) * w(j);
        out(i) = acc;
    }
    return out;
}

Eigen::VectorXd correlate(const Eigen::MatrixXd& a, const Eigen::VectorXd& r) {
    Eigen::VectorXd out(a.cols());
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double* col = a.col(j).data();
        double acc = 0.0;
        for (Eigen::Index i = 0; i < a.rows(); ++i) acc += col[i] * r(i);
        out(j) = acc;
    }
    return out;
}

Eigen::MatrixXcd filter_responses(const Eigen::VectorXd& input, std::span<const Complex> poles,
                                  std::size_t memory) {
    const auto n_samples = static_cast<Eigen::Index>(input.size());
    const auto mem = static_cast<Eigen::Index>(memory);
    Eigen::MatrixXcd z(n_samples, static_cast<Eigen::Index>(poles.size()));
    for (std::size_t j = 0; j < poles.size(); ++j) {
        const Complex p = poles[j];
        for (Eigen::Index n = 0; n < n_samples; ++n) {
            const Eigen::Index reach = std::min(mem, n + 1);
            Complex acc = 0.0;
            Complex power = 1.0;
            for (Eigen::Index k = 0; k < reach; ++k) {
                acc += power * input(n - k);
                power *= p;
            }
            z(n, static_cast<Eigen::Index>(j)) = acc;
        }
    }
    return z;
}

Eigen::MatrixXd atom_outputs(const Eigen::MatrixXcd& responses, std::span<const AtomSource> atoms) {
    const Eigen::Index n_samples = responses.rows();
    const auto n_atoms = static_cast<Eigen::Index>(atoms.size());
    Eigen::MatrixXd out(n_samples, 2 * n_atoms + 1);
    for (Eigen::Index j = 0; j < n_atoms; ++j) {
        const AtomSource& src = atoms[static_cast<std::size_t>(j)];
        const auto a = static_cast<Eigen::Index>(src.pole_a);
        for (Eigen::Index n = 0; n < n_samples; ++n) {
            Complex z = responses(n, a);
            if (src.pole_b != AtomSource::kNone) z *= responses(n, static_cast<Eigen::Index>(src.pole_b));
            z *= src.scale;
            out(n, 2 * j) = 2.0 * z.real();
            out(n, 2 * j + 1) = -2.0 * z.imag();
        }
    }
    out.col(2 * n_atoms).setOnes();
    return out;
}

}  // namespace volterra::kernels::serial
