#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "herd/errors.hpp"
#include "herd/grid.hpp"
#include "herd/merton.hpp"
#include "herd/solver.hpp"

namespace herd {

/// Weight Z(t) the follower places on its own rational decision.
///
/// Solver-produced curves lie strictly inside (0, 1). Curves obtained by
/// decomposing a degenerate decision can touch the boundary; those carry
/// `in_open_range == false`.
struct OpinionCurve {
    TimeGrid grid;
    std::vector<double> values;
    bool in_open_range = true;

    OpinionCurve(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) {
            throw ValidationError("opinion curve: size does not match grid");
        }
        in_open_range = std::all_of(values.begin(), values.end(),
                                    [](double z) { return z > 0.0 && z < 1.0; });
    }
};

/// Z(t) = eta e^{varrho r (T-t)} / (eta e^{varrho r (T-t)} + vartheta).
inline OpinionCurve investment_opinion(const EtaSolution& sol, const HerdConfig& herd,
                                       const MarketParams& m, const AgentPair& agents,
                                       const TimeGrid& grid) {
    const double vt = herd.vartheta(agents, m);
    std::vector<double> z(grid.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double e = sol.eta * std::exp(herd.varrho() * m.r * (herd.horizon() - grid.t(i)));
        z[i] = e / (e + vt);
    }
    return {grid, std::move(z)};
}

inline OpinionCurve investment_opinion(const EtaSolution& sol, const HerdConfig& herd,
                                       const MarketParams& m, const AgentPair& agents) {
    return investment_opinion(sol, herd, m, agents, herd.grid());
}

/// Recovers Z from P* = Z P1 + (1 - Z) P2. Undefined when the rational decisions coincide.
inline OpinionCurve decompose(const DecisionCurve& optimal, const DecisionCurve& rational_1,
                              const DecisionCurve& rational_2) {
    if (!(optimal.grid == rational_1.grid) || !(optimal.grid == rational_2.grid)) {
        throw ValidationError("decompose: curves live on different grids");
    }
    std::vector<double> z(optimal.values.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double p1 = rational_1.values[i];
        const double p2 = rational_2.values[i];
        const double den = p1 - p2;
        if (std::abs(den) <= 1e-14 * std::max(std::abs(p1), std::abs(p2))) {
            throw ValidationError("decompose: undefined when the rational decisions coincide (alpha1 == alpha2)");
        }
        z[i] = (optimal.values[i] - p2) / den;
    }
    return {optimal.grid, std::move(z)};
}

inline DecisionCurve recompose(const OpinionCurve& opinion, const DecisionCurve& rational_1,
                               const DecisionCurve& rational_2) {
    if (!(opinion.grid == rational_1.grid) || !(opinion.grid == rational_2.grid)) {
        throw ValidationError("recompose: curves live on different grids");
    }
    std::vector<double> p(opinion.values.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double z = opinion.values[i];
        p[i] = z * rational_1.values[i] + (1.0 - z) * rational_2.values[i];
    }
    return {opinion.grid, std::move(p)};
}

/// dZ/dt = -varrho r Z (1 - Z).
inline double opinion_ode_rhs(double z, const HerdConfig& herd, const MarketParams& m) {
    return -herd.varrho() * m.r * z * (1.0 - z);
}

/// Classical RK4 from the terminal value Z(T) backwards to t = 0 on `grid`.
inline OpinionCurve integrate_opinion_ode(double terminal, const HerdConfig& herd,
                                          const MarketParams& m, const TimeGrid& grid) {
    if (!(terminal > 0.0 && terminal < 1.0)) {
        throw ValidationError("opinion ode: terminal value must lie in (0, 1)");
    }
    auto f = [&](double z) { return opinion_ode_rhs(z, herd, m); };
    const double h = -grid.step();
    std::vector<double> z(grid.size());
    const std::size_t n = grid.intervals();
    z[n] = terminal;
    for (std::size_t i = n; i > 0; --i) {
        const double y = z[i];
        const double k1 = f(y);
        const double k2 = f(y + 0.5 * h * k1);
        const double k3 = f(y + 0.5 * h * k2);
        const double k4 = f(y + h * k3);
        const double next = y + h / 6.0 * (k1 + 2.0 * (k2 + k3) + k4);
        if (!(next >= 0.0 && next <= 1.0)) {
            throw SolverError("opinion ode: step left [0, 1] at t=" + std::to_string(grid.t(i - 1)),
                              next);
        }
        z[i - 1] = next;
    }
    return {grid, std::move(z)};
}

inline OpinionCurve integrate_opinion_ode(double terminal, const HerdConfig& herd,
                                          const MarketParams& m) {
    return integrate_opinion_ode(terminal, herd, m, herd.grid());
}

/// Penalty weight that makes the opinion-space problem equivalent to the
/// decision-space one: theta D[P1 || P2bar] = lambda I[Z] for every opinion
/// curve Z, with lambda = theta v^2 (a1 - a2)^2 / (a1^2 a2^2 sigma^4)
/// = vartheta v^2 (a1 - a2)^2 / (a1 a2^2 sigma^2).
inline double equivalence_lambda(const MarketParams& m, const AgentPair& agents,
                                 const HerdConfig& herd) {
    const double a1 = agents.follower.alpha;
    const double a2 = agents.leader.alpha;
    const double da = a1 - a2;
    const double v = m.v();
    return herd.vartheta(agents, m) * v * v * da * da / (a1 * a2 * a2 * m.sigma * m.sigma);
}

/// The same expression without the 1/a1 factor. It differs from
/// equivalence_lambda by exactly a1 and is kept only for comparison.
inline double equivalence_lambda_unscaled(const MarketParams& m, const AgentPair& agents,
                                          const HerdConfig& herd) {
    return agents.follower.alpha * equivalence_lambda(m, agents, herd);
}

/// I[Z] = 1/2 int_0^T e^{varrho r (t-T)} Z(t)^2 dt.
inline double opinion_penalty(const OpinionCurve& z, const HerdConfig& herd, const MarketParams& m) {
    const auto& g = z.grid;
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        f[i] = std::exp(herd.varrho() * m.r * (g.t(i) - g.horizon())) * z.values[i] * z.values[i];
    }
    return 0.5 * simpson(f, g.step());
}

}  // namespace herd
