#include <cmath>

#include <gtest/gtest.h>

#include "herd/solver.hpp"
#include "oracle_values.hpp"

namespace {

const herd::MarketParams kMarket{0.04, 0.07, 0.17};
const herd::AgentPair kAgents{{0.2, 0.0}, {0.4, 0.0}};
const herd::AgentPair kEqualAgents{{0.3, 0.0}, {0.3, 0.0}};

herd::HerdConfig herd_of(double vartheta, double rho, const herd::AgentPair& a = kAgents) {
    return herd::HerdConfig::from_vartheta(vartheta, a, kMarket, rho, 50.0);
}

}  // namespace

TEST(HerdConfig, DerivedQuantities) {
    const auto h = herd_of(1.0 / 400.0, 3.0);
    EXPECT_NEAR(h.theta(), 0.2 * 0.0289 / 400.0, 1e-18);
    EXPECT_NEAR(h.vartheta(kAgents, kMarket), 1.0 / 400.0, 1e-16);
    EXPECT_EQ(h.varrho(), -1.0);
}

TEST(HerdConfig, RejectsInvalidFields) {
    EXPECT_THROW(herd::HerdConfig(0.0, 0.0, 50.0), herd::ValidationError);
    EXPECT_THROW(herd::HerdConfig(1.0, -1.0, 50.0), herd::ValidationError);
    EXPECT_THROW(herd::HerdConfig(1.0, 0.0, 0.0), herd::ValidationError);
    EXPECT_THROW(herd::HerdConfig(1.0, 0.0, 50.0, 0.0), herd::ValidationError);
    try {
        herd::HerdConfig(0.0, 0.0, 50.0);
    } catch (const herd::ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("use the merton command"), std::string::npos);
    }
}

TEST(EtaBounds, LowerBoundMatchesClosedForm) {
    const auto b = herd::eta_bounds(kMarket, kAgents, herd_of(1.0 / 400.0, 0.0));
    EXPECT_NEAR(b.lower, std::exp(-0.0009 * 50.0 / (2.0 * 0.0289)), 1e-15);
    EXPECT_NEAR(b.lower, oracle::kEtaLower, 1e-15);
    EXPECT_LE(b.lower, b.upper);
}

TEST(EtaBounds, UpperBoundMatchesOracle) {
    for (const auto& c : oracle::kEtaCases) {
        const auto b = herd::eta_bounds(kMarket, kAgents, herd_of(1.0 / c.vartheta_inv, c.rho));
        EXPECT_NEAR(b.upper, c.eta_upper, 1e-13 * c.eta_upper) << c.vartheta_inv << " " << c.rho;
    }
}

TEST(EtaBounds, EqualRiskAversionCollapsesBracket) {
    const auto b = herd::eta_bounds(kMarket, kEqualAgents, herd_of(0.01, 0.0, kEqualAgents));
    EXPECT_EQ(b.lower, b.upper);
}

TEST(EtaBounds, LargerInitialWealthLowersTheBound) {
    herd::AgentPair richer = kAgents;
    richer.follower.x0 = 1.0;
    const double lo0 = herd::eta_bounds(kMarket, kAgents, herd_of(0.01, 0.0)).lower;
    const double lo1 = herd::eta_bounds(kMarket, richer, herd_of(0.01, 0.0, richer)).lower;
    EXPECT_LT(lo1, lo0);
    EXPECT_NEAR(lo1, oracle::kEtaLowerX1One, 1e-15);
}

TEST(EtaBounds, ExtremeDecayIsARangeError) {
    EXPECT_THROW(herd::eta_bounds(kMarket, kAgents, herd_of(0.01, 400.0)), herd::RangeError);
}

TEST(IterationMap, MapsLowerBoundToUpperBound) {
    const auto h = herd_of(1.0 / 100.0, 4.0);
    const auto b = herd::eta_bounds(kMarket, kAgents, h);
    EXPECT_EQ(herd::iteration_map(b.lower, kMarket, kAgents, h), b.upper);
}

TEST(IterationMap, ConstantWhenRiskAversionsAgree) {
    const auto h = herd_of(0.01, 0.0, kEqualAgents);
    const double lo = herd::eta_bounds(kMarket, kEqualAgents, h).lower;
    for (double xi : {0.1, 0.5, 2.0, 30.0}) EXPECT_EQ(herd::iteration_map(xi, kMarket, kEqualAgents, h), lo);
}

TEST(IterationMap, DecreasingOnTheBracket) {
    const auto h = herd_of(1.0 / 100.0, 4.0);
    const auto b = herd::eta_bounds(kMarket, kAgents, h);
    double prev = INFINITY;
    for (int k = 0; k <= 10; ++k) {
        const double xi = b.lower + (b.upper - b.lower) * k / 10.0;
        const double f = herd::iteration_map(xi, kMarket, kAgents, h);
        EXPECT_LE(f, prev);
        prev = f;
    }
    EXPECT_THROW(herd::iteration_map(0.0, kMarket, kAgents, h), herd::ValidationError);
}

TEST(Contraction, VanishesForEqualRiskAversion) {
    const auto c = herd::check_contraction(kMarket, kEqualAgents, herd_of(0.01, 0.0, kEqualAgents));
    EXPECT_EQ(c.value, 0.0);
    EXPECT_TRUE(c.holds);
}

TEST(Contraction, MatchesOracleIncludingZeroDecayLimit) {
    const auto c0 = herd::check_contraction(kMarket, kAgents, herd_of(0.01, 0.0));
    EXPECT_NEAR(c0.value, oracle::kContractionVt100Rho0, 1e-12 * oracle::kContractionVt100Rho0);
    const auto c4 = herd::check_contraction(kMarket, kAgents, herd_of(0.01, 4.0));
    EXPECT_NEAR(c4.value, oracle::kContractionVt100Rho4, 1e-12 * oracle::kContractionVt100Rho4);
    const auto c2 = herd::check_contraction(kMarket, kAgents, herd_of(0.01, 2.0));
    const auto b = herd::eta_bounds(kMarket, kAgents, herd_of(0.01, 2.0));
    const double expected = 1e-4 * 0.0009 * 0.04 * b.upper / (0.16 * 0.0289 * std::pow(b.lower, 3)) * 50.0;
    EXPECT_NEAR(c2.value, expected, 1e-14 * expected);
}

TEST(SolveEta, MatchesOracleOnTheBaseGrid) {
    for (const auto& c : oracle::kEtaCases) {
        const auto h = herd_of(1.0 / c.vartheta_inv, c.rho);
        const auto s = herd::solve_eta(kMarket, kAgents, h);
        EXPECT_NEAR(s.eta, c.eta, 1e-12) << c.vartheta_inv << " " << c.rho;
        EXPECT_LE(s.residual, 1e-12);
        EXPECT_GE(s.eta, s.eta_lower);
        EXPECT_LE(s.eta, s.eta_upper);
        EXPECT_TRUE(s.contraction_ok);
        EXPECT_EQ(s.method, herd::SolveMethod::fixed_point);
    }
}

TEST(SolveEta, BisectionAgreesWithFixedPoint) {
    for (const auto& c : oracle::kEtaCases) {
        const auto h = herd_of(1.0 / c.vartheta_inv, c.rho);
        const auto fp = herd::solve_eta(kMarket, kAgents, h, herd::SolveMethod::fixed_point);
        const auto bi = herd::solve_eta(kMarket, kAgents, h, herd::SolveMethod::bisection);
        EXPECT_EQ(bi.method, herd::SolveMethod::bisection);
        EXPECT_LE(bi.residual, h.tol());
        EXPECT_LE(std::abs(fp.eta - bi.eta), 10.0 * h.tol());
    }
}

TEST(SolveEta, FallsBackToBisectionOutsideContraction) {
    const auto h = herd_of(2.0, 4.0);
    const auto c = herd::check_contraction(kMarket, kAgents, h);
    ASSERT_FALSE(c.holds) << c.value;
    const auto s = herd::solve_eta(kMarket, kAgents, h);
    EXPECT_EQ(s.method, herd::SolveMethod::bisection);
    EXPECT_FALSE(s.contraction_ok);
    EXPECT_LE(s.residual, h.tol());
    EXPECT_NEAR(herd::iteration_map(s.eta, kMarket, kAgents, h), s.eta, h.tol());
}

TEST(SolveEta, EqualRiskAversionConvergesInOneStep) {
    const auto s = herd::solve_eta(kMarket, kEqualAgents, herd_of(0.01, 0.0, kEqualAgents));
    EXPECT_EQ(s.eta, s.eta_lower);
    EXPECT_EQ(s.iterations, 1u);
    EXPECT_EQ(s.residual, 0.0);
}

TEST(SolveEta, VanishingHerdCoefficientGivesLowerBound) {
    const auto s = herd::solve_eta(kMarket, kAgents, herd_of(1e-12, 0.0));
    EXPECT_NEAR(s.eta, s.eta_lower, 1e-9);
}

TEST(SolveEta, IncreasesWithModifiedHerdCoefficient) {
    for (double rho : {0.0, 2.0, 4.0}) {
        double prev = 0.0;
        for (double inv : {800.0, 400.0, 200.0, 100.0}) {
            const double eta = herd::solve_eta(kMarket, kAgents, herd_of(1.0 / inv, rho)).eta;
            EXPECT_GT(eta, prev);
            prev = eta;
        }
    }
}

TEST(OptimalDecision, BracketedStrictlyByRationalDecisions) {
    for (const auto& c : oracle::kEtaCases) {
        const auto h = herd_of(1.0 / c.vartheta_inv, c.rho);
        const auto p = herd::optimal_decision(kMarket, kAgents, h, herd::solve_eta(kMarket, kAgents, h));
        const auto p1 = herd::rational_decision(kMarket, 0.2, h.grid());
        const auto p2 = herd::rational_decision(kMarket, 0.4, h.grid());
        for (std::size_t i = 0; i < p.values.size(); ++i) {
            EXPECT_LT(p.values[i], p1.values[i]);
            EXPECT_GT(p.values[i], p2.values[i]);
        }
    }
}

TEST(OptimalDecision, MatchesOracleValues) {
    const auto h = herd_of(1.0 / 400.0, 0.0);
    const auto p = herd::optimal_decision(kMarket, kAgents, h, herd::solve_eta(kMarket, kAgents, h));
    EXPECT_NEAR(p.values.front(), oracle::kOptimalAt0, 1e-12);
    EXPECT_NEAR(p.values[500], oracle::kOptimalAtHalf, 1e-12);
    EXPECT_NEAR(p.values.back(), oracle::kOptimalAtT, 1e-12);
}

TEST(OptimalDecision, EqualRiskAversionReproducesRationalDecision) {
    const auto h = herd_of(0.01, 1.0, kEqualAgents);
    const auto p = herd::optimal_decision(kMarket, kEqualAgents, h, herd::solve_eta(kMarket, kEqualAgents, h));
    const auto bar = herd::rational_decision(kMarket, 0.3, h.grid());
    for (std::size_t i = 0; i < p.values.size(); ++i) EXPECT_NEAR(p.values[i], bar.values[i], 1e-14);
}

TEST(OptimalDecision, HerdCoefficientLimits) {
    const herd::HerdConfig tiny(1e-12, 0.0, 50.0);
    const herd::HerdConfig huge(1e6, 0.0, 50.0);
    const auto p_tiny = herd::optimal_decision(kMarket, kAgents, tiny, herd::solve_eta(kMarket, kAgents, tiny));
    const auto p_huge = herd::optimal_decision(kMarket, kAgents, huge, herd::solve_eta(kMarket, kAgents, huge));
    const auto p1 = herd::rational_decision(kMarket, 0.2, tiny.grid());
    const auto p2 = herd::rational_decision(kMarket, 0.4, tiny.grid());
    for (std::size_t i = 0; i < p1.values.size(); ++i) {
        EXPECT_NEAR(p_tiny.values[i], p1.values[i], 1e-6);
        EXPECT_NEAR(p_huge.values[i], p2.values[i], 1e-6);
    }
}

TEST(OptimalDecision, RejectsGridWithDifferentHorizon) {
    const auto h = herd_of(0.01, 0.0);
    const auto s = herd::solve_eta(kMarket, kAgents, h);
    EXPECT_THROW(herd::optimal_decision(kMarket, kAgents, h, s, herd::TimeGrid(40.0, 100)), herd::ValidationError);
}
