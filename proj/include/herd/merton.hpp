#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "herd/errors.hpp"
#include "herd/grid.hpp"
#include "herd/market.hpp"

namespace herd {

/// Risk-aversion coefficient alpha and initial wealth x0 of one agent.
struct AgentProfile {
    double alpha = 1.0;
    double x0 = 0.0;
};

inline void require_valid(const AgentProfile& a, const char* who = "agent") {
    if (!(a.alpha > 0.0) || !std::isfinite(a.alpha)) {
        throw ValidationError(std::string(who) + ": risk aversion must be positive");
    }
    if (!std::isfinite(a.x0)) throw ValidationError(std::string(who) + ": initial wealth not finite");
}

/// Deterministic risky-asset holding P(t) sampled on a uniform grid.
struct DecisionCurve {
    TimeGrid grid;
    std::vector<double> values;

    DecisionCurve(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) {
            throw ValidationError("decision curve: " + std::to_string(values.size()) +
                                  " values for a grid of " + std::to_string(grid.size()));
        }
        for (double x : values) {
            if (!std::isfinite(x)) throw ValidationError("decision curve: non-finite value");
        }
    }

    static DecisionCurve zero(const TimeGrid& g) { return {g, std::vector<double>(g.size(), 0.0)}; }

    double at(double t) const { return interpolate(grid, values, t); }
};

/// Standalone Merton allocation v / (alpha sigma^2) * exp(r (t - T)).
inline double rational_value(const MarketParams& m, double alpha, double horizon, double t) {
    return m.v() / (alpha * m.sigma * m.sigma) * std::exp(m.r * (t - horizon));
}

inline DecisionCurve rational_decision(const MarketParams& m, double alpha, const TimeGrid& grid) {
    require_valid(m);
    require_valid(AgentProfile{alpha, 0.0});
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = rational_value(m, alpha, grid.horizon(), grid.t(i));
    return {grid, std::move(v)};
}

inline double cara_utility(double alpha, double x) { return -std::exp(-alpha * x) / alpha; }

struct WealthMoments {
    double mean = 0.0;
    double variance = 0.0;
};

/// Mean and variance of the (Gaussian) terminal wealth under a deterministic decision.
inline WealthMoments terminal_wealth_moments(const MarketParams& m, double x0,
                                             const DecisionCurve& decision) {
    const auto& g = decision.grid;
    const double T = g.horizon();
    std::vector<double> drift(g.size());
    std::vector<double> diffusion(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double growth = std::exp(m.r * (T - g.t(i)));
        const double p = decision.values[i];
        drift[i] = growth * p;
        diffusion[i] = growth * growth * p * p;
    }
    WealthMoments out;
    out.mean = x0 * std::exp(m.r * T) + m.v() * simpson(drift, g.step());
    out.variance = m.sigma * m.sigma * simpson(diffusion, g.step());
    return out;
}

/// Exponent of the lognormal expectation, -alpha E[X] + alpha^2 Var[X] / 2.
inline double utility_exponent(double alpha, const WealthMoments& w) {
    return -alpha * w.mean + 0.5 * alpha * alpha * w.variance;
}

inline double expected_cara_utility(double alpha, const WealthMoments& w) {
    return -detail::checked_exp(utility_exponent(alpha, w), "expected utility") / alpha;
}

inline double expected_cara_utility(const MarketParams& m, double alpha, double x0,
                                    const DecisionCurve& decision) {
    return expected_cara_utility(alpha, terminal_wealth_moments(m, x0, decision));
}

}  // namespace herd
