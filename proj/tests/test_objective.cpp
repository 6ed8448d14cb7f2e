#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "herd/objective.hpp"

namespace {

const herd::MarketParams kMarket{0.04, 0.07, 0.17};
const herd::AgentPair kAgents{{0.2, 0.0}, {0.4, 0.0}};

herd::HerdConfig herd_of(double vartheta, double rho) {
    return herd::HerdConfig::from_vartheta(vartheta, kAgents, kMarket, rho, 50.0);
}

herd::DecisionCurve optimum(const herd::HerdConfig& h) {
    return herd::optimal_decision(kMarket, kAgents, h, herd::solve_eta(kMarket, kAgents, h));
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

TEST(AverageDeviation, ZeroForIdenticalCurves) {
    const auto p = herd::rational_decision(kMarket, 0.2, herd::TimeGrid(50.0, 100));
    EXPECT_EQ(herd::average_deviation(p, p, 3.0, 0.04), 0.0);
}

TEST(AverageDeviation, UnweightedWhenDecayIsZero) {
    const herd::TimeGrid g(50.0, 200);
    const auto a = herd::rational_decision(kMarket, 0.2, g);
    const auto b = herd::rational_decision(kMarket, 0.4, g);
    // Direct composite Simpson with explicit 1-4-2-...-4-1 weights.
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double w = (i == 0 || i == g.intervals()) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        const double d = a.values[i] - b.values[i];
        s += w * d * d;
    }
    EXPECT_NEAR(herd::average_deviation(a, b, 0.0, 0.04), 0.5 * s * g.step() / 3.0, 1e-12);
}

TEST(AverageDeviation, ConstantGapHasClosedForm) {
    const herd::TimeGrid g(50.0, 1000);
    const herd::DecisionCurve a(g, std::vector<double>(g.size(), 1.5));
    const herd::DecisionCurve b(g, std::vector<double>(g.size(), 1.0));
    const double rho = 3.0, r = 0.04, d = 0.5;
    const double exact = 0.5 * d * d * std::expm1(rho * r * 50.0) / (rho * r);
    EXPECT_NEAR(herd::average_deviation(a, b, rho, r), exact, 1e-10 * exact);
}

TEST(AverageDeviation, RejectsMismatchedGridsAndNegativeDecay) {
    const auto a = herd::rational_decision(kMarket, 0.2, herd::TimeGrid(50.0, 100));
    const auto b = herd::rational_decision(kMarket, 0.2, herd::TimeGrid(50.0, 200));
    EXPECT_THROW(herd::average_deviation(a, b, 0.0, 0.04), herd::ValidationError);
    EXPECT_THROW(herd::average_deviation(a, a, -1.0, 0.04), herd::ValidationError);
}

TEST(ObjectiveValue, MimickingTheLeaderHasNoDeviation) {
    const auto h = herd_of(0.01, 0.0);
    const auto p2 = herd::rational_decision(kMarket, 0.4, h.grid());
    const auto j = herd::objective_value(p2, kMarket, kAgents, h);
    EXPECT_EQ(j.avg_deviation, 0.0);
    EXPECT_EQ(j.total, j.expected_utility);
    EXPECT_EQ(j.expected_utility, herd::expected_cara_utility(kMarket, 0.2, 0.0, p2));
}

TEST(ObjectiveValue, TotalIsUtilityMinusWeightedDeviation) {
    const auto h = herd_of(0.01, 2.0);
    const auto p = herd::rational_decision(kMarket, 0.2, h.grid());
    const auto j = herd::objective_value(p, kMarket, kAgents, h);
    EXPECT_GT(j.avg_deviation, 0.0);
    EXPECT_EQ(j.total, j.expected_utility - h.theta() * j.avg_deviation);
}

TEST(ObjectiveValue, VanishingHerdCoefficientLeavesUtility) {
    const herd::HerdConfig h(1e-14, 0.0, 50.0);
    const auto p = herd::rational_decision(kMarket, 0.2, h.grid());
    const auto j = herd::objective_value(p, kMarket, kAgents, h);
    EXPECT_NEAR(j.total, j.expected_utility, 1e-12);
}

TEST(ObjectiveValue, OptimumBeatsBothRationalDecisions) {
    for (double inv : {800.0, 400.0, 200.0, 100.0}) {
        for (double rho : {0.0, 2.0, 4.0}) {
            const auto h = herd_of(1.0 / inv, rho);
            const double j = herd::objective_value(optimum(h), kMarket, kAgents, h).total;
            const auto g = h.grid();
            EXPECT_GE(j, herd::objective_value(herd::rational_decision(kMarket, 0.2, g), kMarket, kAgents, h).total);
            EXPECT_GE(j, herd::objective_value(herd::rational_decision(kMarket, 0.4, g), kMarket, kAgents, h).total);
        }
    }
}

TEST(ObjectiveValue, StrictlyConcaveAlongSegments) {
    const auto h = herd_of(0.01, 0.0);
    const auto g = h.grid();
    const auto dirs = herd::perturbation_directions(g, 40, 5);
    const auto base = optimum(h);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    for (std::size_t k = 0; k + 1 < dirs.size(); k += 2) {
        auto a = base, b = base;
        for (std::size_t i = 0; i < g.size(); ++i) {
            a.values[i] += 0.3 * dirs[k][i];
            b.values[i] -= 0.3 * dirs[k + 1][i];
        }
        const double lam = u(rng);
        auto mix = a;
        for (std::size_t i = 0; i < g.size(); ++i) mix.values[i] = lam * a.values[i] + (1.0 - lam) * b.values[i];
        const double lhs = herd::objective_value(mix, kMarket, kAgents, h).total;
        const double rhs = lam * herd::objective_value(a, kMarket, kAgents, h).total +
                           (1.0 - lam) * herd::objective_value(b, kMarket, kAgents, h).total;
        EXPECT_GT(lhs, rhs - 1e-12);
    }
}

TEST(PerturbationDirections, SmoothUnitAndReproducible) {
    const herd::TimeGrid g(50.0, 400);
    const auto a = herd::perturbation_directions(g, 30, 3);
    const auto b = herd::perturbation_directions(g, 30, 3);
    ASSERT_EQ(a.size(), 30u);
    EXPECT_EQ(a, b);
    for (const auto& h : a) {
        double norm = 0.0, jump = 0.0;
        for (std::size_t i = 0; i < h.size(); ++i) {
            norm = std::max(norm, std::abs(h[i]));
            if (i > 0) jump = std::max(jump, std::abs(h[i] - h[i - 1]));
        }
        EXPECT_NEAR(norm, 1.0, 1e-15);
        EXPECT_LT(jump, 0.1);
    }
}

TEST(FirstVariation, VanishesAtTheOptimum) {
    for (double rho : {0.0, 4.0}) {
        const auto h = herd_of(1.0 / 400.0, rho);
        const auto rep = herd::first_variation_test(optimum(h), kMarket, kAgents, h);
        EXPECT_LE(rep.max_abs_derivative, 1e-6);
        EXPECT_TRUE(rep.concave);
        EXPECT_LT(rep.max_second_difference, 0.0);
    }
}

TEST(FirstVariation, DetectsTheFollowersRationalDecision) {
    const auto h = herd_of(1.0 / 400.0, 0.0);
    const auto rep = herd::first_variation_test(herd::rational_decision(kMarket, 0.2, h.grid()), kMarket, kAgents, h);
    EXPECT_GT(rep.max_abs_derivative, 1e-4);
}

TEST(BruteForce, MatchesTheClosedFormOptimum) {
    const auto h = herd_of(1.0 / 200.0, 0.0);
    const auto bf = herd::brute_force_optimize(kMarket, kAgents, h, 50);
    EXPECT_TRUE(bf.converged);
    EXPECT_LE(sup_diff(bf.curve.values, optimum(h).values), 1e-3);
}

TEST(BruteForce, EqualRiskAversionRecoversRationalDecision) {
    const herd::AgentPair same{{0.3, 0.0}, {0.3, 0.0}};
    const auto h = herd::HerdConfig::from_vartheta(0.01, same, kMarket, 0.0, 50.0);
    const auto bf = herd::brute_force_optimize(kMarket, same, h, 50);
    EXPECT_LE(sup_diff(bf.curve.values, herd::rational_decision(kMarket, 0.3, h.grid()).values), 1e-3);
}

TEST(BruteForce, HugeHerdCoefficientRecoversLeaderDecision) {
    const herd::HerdConfig h(1e6, 0.0, 50.0);
    const auto bf = herd::brute_force_optimize(kMarket, kAgents, h, 50);
    EXPECT_LE(sup_diff(bf.curve.values, herd::rational_decision(kMarket, 0.4, h.grid()).values), 1e-3);
}

TEST(BruteForce, RejectsOversizedCoarseGrid) {
    EXPECT_THROW(herd::brute_force_optimize(kMarket, kAgents, herd_of(0.01, 0.0), 201), herd::ValidationError);
    EXPECT_THROW(herd::brute_force_optimize(kMarket, kAgents, herd_of(0.01, 0.0), 1), herd::ValidationError);
}

TEST(BruteForce, ReportsNonConvergenceWithBestIterate) {
    herd::BruteForceOptions opt;
    opt.max_iterations = 2;
    const auto bf = herd::brute_force_optimize(kMarket, kAgents, herd_of(0.01, 0.0), 50, opt);
    EXPECT_FALSE(bf.converged);
    EXPECT_EQ(bf.iterations, 2u);
    EXPECT_TRUE(std::isfinite(bf.objective));
}

TEST(BruteForce, AgreesAcrossTheBaseParameterGrid) {
    for (double inv : {800.0, 400.0, 200.0, 100.0}) {
        for (double rho : {0.0, 2.0, 4.0}) {
            const auto h = herd_of(1.0 / inv, rho);
            const auto bf = herd::brute_force_optimize(kMarket, kAgents, h, 50);
            EXPECT_TRUE(bf.converged) << inv << " " << rho;
            EXPECT_LE(sup_diff(bf.curve.values, optimum(h).values), 1e-3) << inv << " " << rho;
        }
    }
}
