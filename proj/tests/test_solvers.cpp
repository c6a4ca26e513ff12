#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <gtest/gtest.h>

#include "volterra/atoms.hpp"
#include "volterra/rng.hpp"
#include "volterra/solvers.hpp"
#include "oracles.hpp"

using namespace volterra;
using namespace volterra::oracle;

TEST(Prox, MatchesAnalyticAndBruteForce) {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const double u = rng.uniform(-2, 2), v = rng.uniform(-2, 2), t = rng.uniform(0, 2.5);
        double z[2] = {u, v};
        group_soft_threshold(z, t);
        const double norm = std::hypot(u, v);
        const double s = std::max(0.0, 1.0 - t / norm);
        EXPECT_NEAR(z[0], s * u, 1e-15);
        EXPECT_NEAR(z[1], s * v, 1e-15);

        const double r = prox_radius_brute_force(norm, t);
        EXPECT_NEAR(std::hypot(z[0], z[1]), r, 1e-8);
    }
}

TEST(Prox, ScalarGroup) {
    double z[1] = {-0.3};
    group_soft_threshold(z, 0.1);
    EXPECT_NEAR(z[0], -0.2, 1e-15);
    group_soft_threshold(z, 0.5);
    EXPECT_EQ(z[0], 0.0);
}

TEST(Gradient, MatchesCentralDifferences) {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const AtomCatalog c = random_catalog(rng, 3, 2);
        const Eigen::VectorXd x = random_input(rng, 30);
        Problem p = make_problem(c, 6, x, sparse_coeffs(rng, c, 2));
        for (auto& t : p.target) t += rng.uniform(-0.1, 0.1);
        Eigen::VectorXd w(c.n_columns());
        for (auto& v : w) v = rng.uniform(-1, 1);
        const Eigen::VectorXd g = residual_gradient(p, w);
        Eigen::VectorXd fd(w.size());
        const double h = 1e-5;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            Eigen::VectorXd a = w, b = w;
            a(i) += h;
            b(i) -= h;
            fd(i) = (residual_sq(p, a) - residual_sq(p, b)) / (2 * h);
        }
        EXPECT_LE((g - fd).norm(), 1e-5 * g.norm());
    }
}

TEST(Mip, MatchesExhaustiveEnumeration) {
    Rng rng(3);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t n1 = 2 + rng.below(3), n2 = 1 + rng.below(3);
        const AtomCatalog c = random_catalog(rng, n1, n2);
        const Eigen::VectorXd x = random_input(rng, 40);
        Problem p = make_problem(c, 8, x, sparse_coeffs(rng, c, 1 + rng.below(3)));
        Eigen::VectorXd noise(p.target.size());
        for (auto& v : noise) v = rng.uniform(-0.05, 0.05);
        p.target += noise;
        p.epsilon = rng.uniform(1.0, 3.0) * noise.squaredNorm();
        p.big_M = 1e9;
        const Exhaustive ex = exhaustive_search(p);
        ASSERT_TRUE(ex.feasible);
        const SolveResult r = solve_mip(p);
        EXPECT_EQ(r.cardinality, ex.cardinality) << "trial " << trial;
        EXPECT_LE(r.residual_sq, p.epsilon * (1 + 1e-9));
        EXPECT_NEAR(r.residual_sq, ex.residual, 1e-9 * std::max(1.0, ex.residual));
        EXPECT_TRUE(r.converged);
    }
}

TEST(Mip, SingleAtomExactRepresentation) {
    Rng rng(4);
    const AtomCatalog c = random_catalog(rng, 3, 2);
    const Eigen::VectorXd x = random_input(rng, 40);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(c.n_columns());
    w(2 * 3) = 1.3;
    w(2 * 3 + 1) = -0.4;
    Problem p = make_problem(c, 8, x, w);
    p.epsilon = 1e-12 * p.target.squaredNorm();
    const SolveResult r = solve_mip(p);
    EXPECT_EQ(r.cardinality, 1u);
    EXPECT_GT(std::hypot(r.coeffs(6), r.coeffs(7)), 1.0);
}

TEST(Mip, EmptySupportWhenEpsilonCoversTarget) {
    Rng rng(5);
    const AtomCatalog c = random_catalog(rng, 3, 1);
    Problem p = make_problem(c, 5, random_input(rng, 20), sparse_coeffs(rng, c, 2));
    p.epsilon = p.target.squaredNorm();
    const SolveResult r = solve_mip(p);
    EXPECT_EQ(r.cardinality, 0u);
    EXPECT_TRUE(r.coeffs.isZero());
}

TEST(Mip, InfeasibleAndBudget) {
    Rng rng(6);
    const AtomCatalog c = random_catalog(rng, 2, 0);
    Problem p = make_problem(c, 5, random_input(rng, 30), sparse_coeffs(rng, c, 1));
    for (auto& t : p.target) t += rng.uniform(-1, 1);
    p.epsilon = 1e-9;
    try {
        solve_mip(p);
        FAIL() << "expected InfeasibleError";
    } catch (const InfeasibleError& e) {
        EXPECT_GT(e.min_residual_sq(), p.epsilon);
    }

    const AtomCatalog big = random_catalog(rng, 6, 3);
    Problem q = make_problem(big, 8, random_input(rng, 40), sparse_coeffs(rng, big, 4));
    q.epsilon = 1e-10 * q.target.squaredNorm();
    q.big_M = 1e9;
    EXPECT_THROW(solve_mip(q, {3}), NodeBudgetExceeded);
}

TEST(L1, LambdaAboveCriticalGivesZero) {
    Rng rng(7);
    const AtomCatalog c = random_catalog(rng, 4, 3);
    const Problem p = make_problem(c, 6, random_input(rng, 30), sparse_coeffs(rng, c, 3));
    const double lmax = lambda_max(p);
    const double lip = gram_spectral_norm(p.output_dictionary);
    const PenalizedSolve s = solve_penalized(p, lmax * 1.0001, Eigen::VectorXd::Zero(c.n_columns()), {}, lip);
    EXPECT_TRUE(s.coeffs.isZero());
    const PenalizedSolve t = solve_penalized(p, lmax * 0.5, Eigen::VectorXd::Zero(c.n_columns()), {}, lip);
    EXPECT_FALSE(t.coeffs.isZero());
}

TEST(L1, RecoversSingleAtomNoiseless) {
    Rng rng(8);
    for (int trial = 0; trial < 5; ++trial) {
        const AtomCatalog c = random_catalog(rng, 5, 4);
        std::vector<std::size_t> chosen;
        const Eigen::VectorXd w = sparse_coeffs(rng, c, 1, &chosen);
        Problem p = make_problem(c, 10, random_input(rng, 60), w);
        p.epsilon = 1e-10 * p.target.squaredNorm();
        const SolveResult r = solve_l1(p);
        EXPECT_LE(r.residual_sq, p.epsilon * (1 + 1e-6));
        const auto layout = column_groups(c);
        std::vector<double> mod;
        for (const auto& g : layout) {
            mod.push_back(g.size == 2 ? std::hypot(r.coeffs(g.first), r.coeffs(g.first + 1)) : std::abs(r.coeffs(g.first)));
        }
        const double top = *std::max_element(mod.begin(), mod.end());
        EXPECT_EQ(mod[chosen[0]], top);
        for (std::size_t g = 0; g < mod.size(); ++g) {
            if (g != chosen[0]) EXPECT_LT(mod[g], 1e-6 * top) << "trial " << trial << " group " << g;
        }
    }
}

TEST(L1, FeasibleAndMipNoSparserViolation) {
    Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const AtomCatalog c = random_catalog(rng, 4, 3);
        Problem p = make_problem(c, 8, random_input(rng, 50), sparse_coeffs(rng, c, 2));
        Eigen::VectorXd noise(p.target.size());
        for (auto& v : noise) v = rng.uniform(-0.05, 0.05);
        p.target += noise;
        p.epsilon = 2.0 * noise.squaredNorm();
        p.big_M = 1e9;
        EXPECT_LE(solve_l1(p).residual_sq, p.epsilon * (1 + 1e-6));
        EXPECT_LE(solve_mip(p).residual_sq, p.epsilon * (1 + 1e-6));
    }
}

TEST(L1, ReweightingKeepsFeasibilityAndSparsifies) {
    Rng rng(10);
    const AtomCatalog c = random_catalog(rng, 8, 8);
    Problem p = make_problem(c, 8, random_input(rng, 60), sparse_coeffs(rng, c, 3));
    Eigen::VectorXd noise(p.target.size());
    for (auto& v : noise) v = rng.uniform(-0.1, 0.1);
    p.target += noise;
    p.epsilon = 1.5 * noise.squaredNorm();
    L1Options plain;
    plain.normalize_columns = false;
    plain.reweight_rounds = 0;
    const L1Options rw;
    const SolveResult a = solve_l1(p, plain);
    const SolveResult b = solve_l1(p, rw);
    EXPECT_LE(b.residual_sq, p.epsilon * (1 + 1e-6));
    EXPECT_LE(count_active(b.coeffs, c, 1e-3), count_active(a.coeffs, c, 1e-3));
}

TEST(L1, InfeasibleWhenEpsilonBelowLeastSquares) {
    Rng rng(11);
    const AtomCatalog c = random_catalog(rng, 2, 0);
    Problem p = make_problem(c, 4, random_input(rng, 30), sparse_coeffs(rng, c, 1));
    for (auto& t : p.target) t += rng.uniform(-1, 1);
    p.epsilon = 1e-9;
    EXPECT_THROW(solve_l1(p), InfeasibleError);
}

TEST(Fw, FeasibleMonotoneAndConverges) {
    Rng rng(12);
    const AtomCatalog c = random_catalog(rng, 10, 10);
    const Eigen::VectorXd w = sparse_coeffs(rng, c, 3);
    Problem p = make_problem(c, 8, random_input(rng, 60), w);
    p.tau = atomic_l1_cost(w, c);
    FwOptions opt;
    opt.record_iterates = true;
    opt.max_iter = 20000;
    opt.gap_tol = 1e-9;
    const FwResult r = solve_fw_traced(p, opt);
    for (double cost : r.cost_trace) EXPECT_LE(cost, p.tau * (1 + 1e-9));
    const auto& trace = r.result.objective_trace;
    for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_LE(trace[i], trace[i - 1] + 1e-12 * std::max(1.0, trace[i - 1]));
    EXPECT_LE(r.result.residual_sq, 1e-6 * p.target.squaredNorm());
}

TEST(Fw, SampledLmoIsSeedDeterministic) {
    Rng rng(13);
    const AtomCatalog c = random_catalog(rng, 10, 10);
    Problem p = make_problem(c, 8, random_input(rng, 60), sparse_coeffs(rng, c, 3));
    p.tau = 3.0;
    FwOptions opt;
    opt.samples_per_iter = 5;
    opt.seed = 77;
    opt.max_iter = 200;
    const SolveResult a = solve_fw(p, opt), b = solve_fw(p, opt);
    EXPECT_EQ(a.coeffs, b.coeffs);
    EXPECT_LE(atomic_l1_cost(a.coeffs, c), p.tau * (1 + 1e-9));
}

TEST(Fw, OpenLoopStepStaysFeasible) {
    Rng rng(14);
    const AtomCatalog c = random_catalog(rng, 6, 4);
    Problem p = make_problem(c, 8, random_input(rng, 40), sparse_coeffs(rng, c, 2));
    p.tau = 1.0;
    FwOptions opt;
    opt.step = StepRule::kOpenLoop;
    opt.max_iter = 300;
    opt.record_iterates = true;
    const FwResult r = solve_fw_traced(p, opt);
    for (double cost : r.cost_trace) EXPECT_LE(cost, p.tau * (1 + 1e-9));
}

TEST(Support, RefitIsLeastSquaresOnSupport) {
    Rng rng(15);
    const AtomCatalog c = random_catalog(rng, 4, 2);
    Problem p = make_problem(c, 6, random_input(rng, 40), sparse_coeffs(rng, c, 2));
    for (auto& t : p.target) t += rng.uniform(-0.05, 0.05);
    SolveResult r;
    r.coeffs = Eigen::VectorXd::Zero(c.n_columns());
    r.coeffs(0) = 1.0;        // group 0
    r.coeffs(4) = 1e-9;       // group 2, below threshold
    r.coeffs(6) = 0.5;        // group 3
    const SupportFit s = extract_support(p, r, 1e-6);
    ASSERT_EQ(s.groups, (std::vector<std::size_t>{0, 3}));
    EXPECT_NEAR(s.residual_sq, subset_residual(p, {0, 3}), 1e-10);
    EXPECT_THROW(extract_support(p, r, 0.0), std::invalid_argument);

    SolveResult zero;
    zero.coeffs = Eigen::VectorXd::Zero(c.n_columns());
    const SupportFit z = extract_support(p, zero, 1e-6);
    EXPECT_TRUE(z.groups.empty());
    EXPECT_NEAR(z.residual_sq, subset_residual(p, {c.constant_group()}), 1e-10);
}

TEST(Epsilon, NoiseBoundModes) {
    EXPECT_DOUBLE_EQ(epsilon_from_noise(0.5, 40), 10.0);
    EXPECT_DOUBLE_EQ(epsilon_from_noise(0.5, 40, NoiseBound::kVector), 0.25);
}
