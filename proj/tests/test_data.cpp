#include <cmath>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "volterra/data.hpp"
#include "volterra/presets.hpp"
#include "volterra/rng.hpp"

using namespace volterra;

namespace {

Dataset make_dataset(const AtomicModel& m, std::size_t n, double noise_pct, std::uint64_t seed, std::size_t memory) {
    Dataset d;
    d.input = uniform_input(n, seed);
    d.output_clean = simulate(eval_kernels(m, memory), d.input);
    const NoisyOutput noisy = add_uniform_noise(*d.output_clean, noise_pct, seed + 1);
    d.output_noisy = noisy.noisy;
    d.eta_max = noisy.eta_max;
    d.mask.assign(n, true);
    return d;
}

}  // namespace

TEST(Noise, BoundedAndScaledToMeanAbs) {
    Eigen::VectorXd clean(4);
    clean << 1.0, -3.0, 2.0, -2.0;  // mean |y| = 2
    const NoisyOutput out = add_uniform_noise(clean, 10.0, 3);
    EXPECT_DOUBLE_EQ(out.eta_max, 0.2);
    EXPECT_LE(out.noise.cwiseAbs().maxCoeff(), 0.2);
    EXPECT_EQ(out.noisy, clean + out.noise);
    EXPECT_EQ(add_uniform_noise(clean, 10.0, 3).noise, out.noise);
    EXPECT_NE(add_uniform_noise(clean, 10.0, 4).noise, out.noise);
}

TEST(Noise, ZeroLevelAndZeroSignal) {
    Eigen::VectorXd clean(3);
    clean << 1, 2, 3;
    const NoisyOutput out = add_uniform_noise(clean, 0.0, 1);
    EXPECT_EQ(out.noisy, clean);
    EXPECT_EQ(out.eta_max, 0.0);
    EXPECT_THROW(add_uniform_noise(Eigen::VectorXd::Zero(5), 5.0, 1), std::invalid_argument);
}

TEST(Noise, UniformSpread) {
    const NoisyOutput out = add_uniform_noise(Eigen::VectorXd::Ones(20000), 100.0, 9);
    // Uniform on [-1, 1): mean 0, variance 1/3.
    EXPECT_NEAR(out.noise.mean(), 0.0, 0.02);
    EXPECT_NEAR(out.noise.squaredNorm() / 20000.0, 1.0 / 3.0, 0.02);
}

TEST(Mask, DropIndices) {
    const auto idx = random_drop_indices(150, 30.0, 5);
    EXPECT_EQ(idx.size(), 45u);
    EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
    EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
    EXPECT_EQ(random_drop_indices(150, 30.0, 5), idx);
    EXPECT_TRUE(random_drop_indices(10, 0.0, 5).empty());
    EXPECT_THROW(random_drop_indices(10, 100.0, 5), std::invalid_argument);
}

TEST(Mask, ApplyAndValidate) {
    const ExamplePreset p = load_preset("example1");
    Dataset d = make_dataset(p.model, 30, 5.0, 1, 20);
    const std::vector<std::size_t> drop{0, 7, 29};
    d = apply_mask(d, drop);
    EXPECT_EQ(d.observed_count(), 27u);
    d.output_noisy(7) = std::nan("");
    EXPECT_NO_THROW(d.validate());
    d.output_noisy(8) = std::nan("");
    EXPECT_THROW(d.validate(), std::invalid_argument);
    const std::vector<std::size_t> bad{30};
    EXPECT_THROW(apply_mask(d, bad), std::out_of_range);
}

TEST(Mask, NoiseAboveBoundIsRejected) {
    const ExamplePreset p = load_preset("example1");
    Dataset d = make_dataset(p.model, 30, 5.0, 1, 20);
    d.output_noisy(3) = (*d.output_clean)(3) + 2.0 * d.eta_max;
    EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(Mask, MaskedProblemEqualsPhysicallyRemovedRows) {
    const ExamplePreset p = load_preset("example2");
    const PoleGrid grid = build_grid(2, 4, 0.3, 0.9);
    const Dictionary dict(build_catalog(grid, PairPolicy::sampled(10), 1.0, 1.0, 3), 25);
    Dataset full = make_dataset(p.model, 60, 8.0, 2, 40);
    const std::vector<std::size_t> drop = random_drop_indices(60, 30.0, 7);
    const Dataset masked = apply_mask(full, drop);
    const double eps = epsilon_from_noise(full.eta_max, masked.observed_count());
    const Problem a = assemble_problem(dict, masked, eps);

    // Build the unmasked problem by hand on the kept rows.
    std::vector<bool> keep(60, true);
    for (std::size_t k : drop) keep[k] = false;
    const Eigen::MatrixXd rows = dict.output_matrix(full.input);
    Problem b;
    b.catalog = dict.catalog();
    b.epsilon = eps;
    b.output_dictionary.resize(masked.observed_count(), rows.cols());
    b.target.resize(masked.observed_count());
    Eigen::Index r = 0;
    for (std::size_t k = 0; k < 60; ++k) {
        if (!keep[k]) continue;
        b.output_dictionary.row(r) = rows.row(static_cast<Eigen::Index>(k));
        b.target(r) = full.output_noisy(static_cast<Eigen::Index>(k));
        ++r;
    }
    EXPECT_EQ(a.output_dictionary, b.output_dictionary);
    EXPECT_EQ(a.target, b.target);
    const SolveResult sa = solve_l1(a), sb = solve_l1(b);
    EXPECT_EQ(sa.coeffs, sb.coeffs);
    EXPECT_LE(sa.residual_sq, eps * (1 + 1e-6));
}

TEST(Metrics, PerfectEstimate) {
    const ExamplePreset p = load_preset("example1");
    const Dataset d = make_dataset(p.model, 50, 0.0, 4, 60);
    const Metrics m = compute_metrics(p.model, p.model, 6, d, 60);
    EXPECT_LT(m.output_rmse, 1e-12);
    EXPECT_EQ(m.kernel_h1_rmse, 0.0);
    EXPECT_EQ(m.kernel_h2_rmse, 0.0);
    EXPECT_EQ(m.pole_match_report.size(), model_poles(p.model).size());
    for (const auto& pm : m.pole_match_report) EXPECT_EQ(pm.distance, 0.0);
}

TEST(Metrics, OffsetEstimate) {
    const ExamplePreset p = load_preset("example1");
    const Dataset d = make_dataset(p.model, 50, 0.0, 4, 60);
    AtomicModel shifted = p.model;
    shifted.h0 += 0.25;
    const Metrics m = compute_metrics(p.model, shifted, 7, d, 60);
    EXPECT_NEAR(m.output_rmse, 0.25, 1e-12);
    EXPECT_NEAR(m.output_max_err, 0.25, 1e-12);
    EXPECT_EQ(m.cardinality, 7u);

    const Metrics empty = compute_metrics(p.model, AtomicModel{}, 0, d, 60);
    for (const auto& pm : empty.pole_match_report) EXPECT_EQ(pm.distance, 2.0);
}

TEST(Presets, TableValues) {
    const ExamplePreset a = load_preset("example1");
    EXPECT_EQ(a.n_samples, 100u);
    EXPECT_DOUBLE_EQ(a.noise_pct, 11.2);
    ASSERT_EQ(a.model.first_order.size(), 4u);
    ASSERT_EQ(a.model.second_order.size(), 2u);
    EXPECT_EQ(a.model.first_order[2].atom.pole.value(), Complex(0.7844, 0.0577));
    EXPECT_EQ(a.model.second_order[1].coeff, Complex(1.7244, -0.9657));
    EXPECT_EQ(model_poles(a.model).size(), 8u);

    const ExamplePreset b = load_preset("example2");
    EXPECT_EQ(b.n_samples, 150u);
    EXPECT_DOUBLE_EQ(b.noise_pct, 8.0);
    EXPECT_EQ(b.model.first_order[3].atom.pole.value(), Complex(0.8084, -0.0051));
    EXPECT_EQ(b.model.second_order[0].atom.pole2.value(), Complex(-0.5943, -0.5600));
    EXPECT_THROW(load_preset("example3"), std::invalid_argument);
}
