// Datasets, measurement noise, observation masks and error metrics.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "volterra/atoms.hpp"
#include "volterra/model.hpp"
#include "volterra/solvers.hpp"

namespace volterra {

/// Input/output record. Outputs at unobserved samples (mask == false) carry
/// no information and may be NaN.
struct Dataset {
    Eigen::VectorXd input;
    std::optional<Eigen::VectorXd> output_clean;
    Eigen::VectorXd output_noisy;
    std::vector<bool> mask;
    double eta_max = 0.0;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> meta;

    std::size_t size() const { return static_cast<std::size_t>(input.size()); }
    std::size_t observed_count() const;
    /// Throws std::invalid_argument on length mismatch, an empty mask or a
    /// noise sample exceeding eta_max.
    void validate() const;
};

struct NoisyOutput {
    Eigen::VectorXd noisy;
    Eigen::VectorXd noise;
    double eta_max = 0.0;
};

/// Uniform noise on [-eta_max, eta_max] with eta_max = level_pct/100 * mean|clean|.
NoisyOutput add_uniform_noise(const Eigen::VectorXd& clean, double level_pct, std::uint64_t seed);

/// Seeded i.i.d. uniform(lo, hi) excitation.
Eigen::VectorXd uniform_input(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0);

/// Marks the listed samples as unobserved.
Dataset apply_mask(Dataset dataset, std::span<const std::size_t> drop_indices);

/// round(pct/100 * n) distinct sample indices, sorted, drawn with `seed`.
std::vector<std::size_t> random_drop_indices(std::size_t n, double pct, std::uint64_t seed);

Eigen::MatrixXd observed_rows(const Eigen::MatrixXd& x, const std::vector<bool>& mask);
Eigen::VectorXd observed_rows(const Eigen::VectorXd& y, const std::vector<bool>& mask);

/// Identification problem on the observed samples of `dataset`.
Problem assemble_problem(const Dictionary& dictionary, const Dataset& dataset, double epsilon, double tau = 0.0);

struct PoleMatch {
    Complex true_pole;
    Complex nearest;
    double distance = 0.0;
};

struct Metrics {
    double output_rmse = 0.0;
    double output_max_err = 0.0;
    double kernel_h1_rmse = 0.0;
    double kernel_h2_rmse = 0.0;
    std::size_t cardinality = 0;
    std::vector<PoleMatch> pole_match_report;
};

/// Distinct poles of a model, upper-half representatives.
std::vector<Pole> model_poles(const AtomicModel& model);

/// Errors of `estimate` against `truth`: outputs over all samples of the
/// clean signal (simulated from truth when the dataset has none), kernels
/// over L and L x L (H2 symmetrized), and nearest recovered pole for every
/// true pole.
Metrics compute_metrics(const AtomicModel& truth, const AtomicModel& estimate, std::size_t cardinality,
                        const Dataset& dataset, std::size_t memory);
Metrics compute_metrics(const AtomicModel& truth, const SolveResult& result, const Dataset& dataset,
                        std::size_t memory);

}  // namespace volterra
