#include "volterra/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "volterra/rng.hpp"

namespace volterra {

std::size_t Dataset::observed_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

void Dataset::validate() const {
    const std::size_t n = size();
    if (n == 0) throw std::invalid_argument("dataset is empty");
    if (static_cast<std::size_t>(output_noisy.size()) != n || mask.size() != n) {
        throw std::invalid_argument("dataset input, output and mask lengths differ");
    }
    if (observed_count() == 0) throw std::invalid_argument("dataset has no observed samples");
    if (!input.allFinite()) throw std::invalid_argument("dataset input must be finite");
    if (!(eta_max >= 0.0)) throw std::invalid_argument("eta_max must be nonnegative");
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        if (mask[k] && !std::isfinite(output_noisy(i))) {
            throw std::invalid_argument("observed output at sample " + std::to_string(k) + " is not finite");
        }
    }
    if (output_clean) {
        if (static_cast<std::size_t>(output_clean->size()) != n) throw std::invalid_argument("clean output length differs");
        const double slack = 1e-12 * std::max(1.0, output_clean->cwiseAbs().maxCoeff());
        for (std::size_t k = 0; k < n; ++k) {
            const auto i = static_cast<Eigen::Index>(k);
            if (mask[k] && std::abs(output_noisy(i) - (*output_clean)(i)) > eta_max + slack) {
                throw std::invalid_argument("noise at sample " + std::to_string(k) + " exceeds eta_max");
            }
        }
    }
}

NoisyOutput add_uniform_noise(const Eigen::VectorXd& clean, double level_pct, std::uint64_t seed) {
    if (!(level_pct >= 0.0)) throw std::invalid_argument("noise level must be nonnegative");
    NoisyOutput out;
    out.noise = Eigen::VectorXd::Zero(clean.size());
    if (level_pct == 0.0) {
        out.noisy = clean;
        return out;
    }
    const double mean_abs = clean.size() > 0 ? clean.cwiseAbs().mean() : 0.0;
    if (mean_abs == 0.0) {
        throw std::invalid_argument("noise level relative to mean |y| is undefined for an all-zero output");
    }
    out.eta_max = level_pct / 100.0 * mean_abs;
    Rng rng(seed);
    for (Eigen::Index k = 0; k < clean.size(); ++k) {
        // 2u - 1 lies in [-1, 1), so |noise| <= eta_max exactly.
        out.noise(k) = out.eta_max * (2.0 * rng.uniform01() - 1.0);
    }
    out.noisy = clean + out.noise;
    return out;
}

Eigen::VectorXd uniform_input(std::size_t n, std::uint64_t seed, double lo, double hi) {
    Rng rng(seed);
    Eigen::VectorXd x(static_cast<Eigen::Index>(n));
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = rng.uniform(lo, hi);
    return x;
}

Dataset apply_mask(Dataset dataset, std::span<const std::size_t> drop_indices) {
    if (dataset.mask.size() != dataset.size()) dataset.mask.assign(dataset.size(), true);
    for (std::size_t k : drop_indices) {
        if (k >= dataset.size()) throw std::out_of_range("mask index " + std::to_string(k) + " past end of dataset");
        dataset.mask[k] = false;
    }
    if (dataset.observed_count() == 0) throw std::invalid_argument("mask removes every observation");
    return dataset;
}

std::vector<std::size_t> random_drop_indices(std::size_t n, double pct, std::uint64_t seed) {
    if (!(pct >= 0.0 && pct < 100.0)) throw std::invalid_argument("drop percentage must lie in [0, 100)");
    const auto count = static_cast<std::size_t>(std::llround(pct / 100.0 * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

Eigen::MatrixXd observed_rows(const Eigen::MatrixXd& x, const std::vector<bool>& mask) {
    if (mask.size() != static_cast<std::size_t>(x.rows())) throw std::invalid_argument("mask length differs from row count");
    const auto kept = static_cast<Eigen::Index>(std::count(mask.begin(), mask.end(), true));
    if (kept == 0) throw std::invalid_argument("empty observation set");
    Eigen::MatrixXd out(kept, x.cols());
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < mask.size(); ++k) {
        if (mask[k]) out.row(row++) = x.row(static_cast<Eigen::Index>(k));
    }
    return out;
}

Eigen::VectorXd observed_rows(const Eigen::VectorXd& y, const std::vector<bool>& mask) {
    return observed_rows(Eigen::MatrixXd(y), mask).col(0);
}

Problem assemble_problem(const Dictionary& dictionary, const Dataset& dataset, double epsilon, double tau) {
    dataset.validate();
    Problem p;
    p.output_dictionary = observed_rows(dictionary.output_matrix(dataset.input), dataset.mask);
    p.target = observed_rows(dataset.output_noisy, dataset.mask);
    p.catalog = dictionary.catalog();
    p.epsilon = epsilon;
    p.tau = tau;
    return p;
}

std::vector<Pole> model_poles(const AtomicModel& model) {
    std::vector<Pole> out;
    const auto add = [&out](const Pole& p) {
        const Pole up = p.upper();
        if (std::find(out.begin(), out.end(), up) == out.end()) out.push_back(up);
    };
    for (const auto& t : model.first_order) add(t.atom.pole);
    for (const auto& t : model.second_order) {
        add(t.atom.pole1);
        add(t.atom.pole2);
    }
    return out;
}

Metrics compute_metrics(const AtomicModel& truth, const AtomicModel& estimate, std::size_t cardinality,
                        const Dataset& dataset, std::size_t memory) {
    const VolterraKernels kt = eval_kernels(truth, memory);
    const VolterraKernels ke = eval_kernels(estimate, memory);
    const Eigen::VectorXd clean = dataset.output_clean ? *dataset.output_clean : simulate(kt, dataset.input);
    const Eigen::VectorXd err = simulate(ke, dataset.input) - clean;

    Metrics m;
    const auto n = static_cast<double>(err.size());
    m.output_rmse = err.size() > 0 ? std::sqrt(err.squaredNorm() / n) : 0.0;
    m.output_max_err = err.size() > 0 ? err.cwiseAbs().maxCoeff() : 0.0;
    m.kernel_h1_rmse = std::sqrt((kt.h1 - ke.h1).squaredNorm() / static_cast<double>(memory));
    // Only the symmetric part of H2 reaches the output.
    const Eigen::MatrixXd dh2 = kt.h2 - ke.h2;
    const Eigen::MatrixXd sym = 0.5 * (dh2 + dh2.transpose());
    m.kernel_h2_rmse = std::sqrt(sym.squaredNorm() / static_cast<double>(memory * memory));
    m.cardinality = cardinality;

    const std::vector<Pole> recovered = model_poles(estimate);
    for (const Pole& p : model_poles(truth)) {
        // Without any recovered pole, report the disk diameter as distance.
        PoleMatch match{p.value(), Complex{}, 2.0};
        for (const Pole& q : recovered) {
            const double d = std::abs(p.value() - q.value());
            if (d < match.distance) match = {p.value(), q.value(), d};
        }
        m.pole_match_report.push_back(match);
    }
    return m;
}

Metrics compute_metrics(const AtomicModel& truth, const SolveResult& result, const Dataset& dataset,
                        std::size_t memory) {
    return compute_metrics(truth, result.model, result.cardinality, dataset, memory);
}

}  // namespace volterra
