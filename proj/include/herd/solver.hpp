#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "herd/errors.hpp"
#include "herd/grid.hpp"
#include "herd/market.hpp"
#include "herd/merton.hpp"

namespace herd {

/// The following agent (A1) and the leading expert (A2). Only the follower's
/// initial wealth enters the problem.
struct AgentPair {
    AgentProfile follower;
    AgentProfile leader;

    double ratio() const noexcept { return follower.alpha / leader.alpha; }
};

inline void require_valid(const AgentPair& a) {
    require_valid(a.follower, "follower");
    require_valid(a.leader, "leader");
}

/// Herd coefficient theta, decay rate rho, horizon and numerics.
///
/// theta is the stored quantity; the modified coefficient
/// vartheta = theta / (alpha1 sigma^2) depends on the follower and the market,
/// so it is always derived on demand.
class HerdConfig {
public:
    static constexpr double kDefaultTol = 1e-12;
    static constexpr std::size_t kDefaultGridN = 1000;

    HerdConfig(double theta, double rho, double horizon, double tol = kDefaultTol,
               std::size_t grid_n = kDefaultGridN)
        : theta_(theta), rho_(rho), horizon_(horizon), tol_(tol), grid_n_(grid_n) {
        if (!(theta > 0.0) || !std::isfinite(theta)) {
            throw ValidationError(
                "herd coefficient must be positive; use the merton command for theta=0");
        }
        if (!(rho >= 0.0) || !std::isfinite(rho)) throw ValidationError("decay rate rho must be >= 0");
        if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon T must be > 0");
        if (!(tol > 0.0)) throw ValidationError("solver tolerance must be > 0");
        if (grid_n < 2) throw ValidationError("grid_n must be >= 2");
    }

    static HerdConfig from_vartheta(double vartheta, const AgentPair& agents, const MarketParams& m,
                                    double rho, double horizon, double tol = kDefaultTol,
                                    std::size_t grid_n = kDefaultGridN) {
        return {vartheta * agents.follower.alpha * m.sigma * m.sigma, rho, horizon, tol, grid_n};
    }

    double theta() const noexcept { return theta_; }
    double rho() const noexcept { return rho_; }
    double horizon() const noexcept { return horizon_; }
    double tol() const noexcept { return tol_; }
    std::size_t grid_n() const noexcept { return grid_n_; }

    double varrho() const noexcept { return 2.0 - rho_; }
    double vartheta(const AgentPair& agents, const MarketParams& m) const noexcept {
        return theta_ / (agents.follower.alpha * m.sigma * m.sigma);
    }

    TimeGrid grid() const { return TimeGrid(horizon_, grid_n_); }

    HerdConfig with_theta(double theta) const { return {theta, rho_, horizon_, tol_, grid_n_}; }
    HerdConfig with_rho(double rho) const { return {theta_, rho, horizon_, tol_, grid_n_}; }
    HerdConfig with_tol(double tol) const { return {theta_, rho_, horizon_, tol, grid_n_}; }
    HerdConfig with_grid_n(std::size_t n) const { return {theta_, rho_, horizon_, tol_, n}; }

private:
    double theta_;
    double rho_;
    double horizon_;
    double tol_;
    std::size_t grid_n_;
};

enum class SolveMethod { automatic, fixed_point, bisection };

inline const char* to_string(SolveMethod m) {
    switch (m) {
        case SolveMethod::fixed_point: return "fixed-point";
        case SolveMethod::bisection: return "bisection";
        default: return "automatic";
    }
}

struct EtaBounds {
    double lower = 0.0;
    double upper = 0.0;
};

struct EtaSolution {
    double eta = 0.0;
    double eta_lower = 0.0;
    double eta_upper = 0.0;
    SolveMethod method = SolveMethod::fixed_point;
    std::size_t iterations = 0;
    double residual = 0.0;
    bool contraction_ok = false;
};

struct ContractionCheck {
    double value = 0.0;
    bool holds = false;
};

namespace detail {

/// Precomputed pieces of the fixed-point map
///   f(xi) = eta_lower * exp( int_0^T c / (xi e^{varrho r (T-t)} + vartheta)^2 dt ),
///   c = vartheta^2 v^2 (alpha1/alpha2 - 1)^2 / (2 sigma^2).
class EtaMap {
public:
    EtaMap(const MarketParams& m, const AgentPair& agents, const HerdConfig& herd)
        : grid_(herd.grid()), vartheta_(herd.vartheta(agents, m)) {
        require_valid(m);
        require_valid(agents);
        const double T = herd.horizon();
        const double decay = herd.varrho() * m.r;
        if (std::abs(decay * T) > kMaxExponent) {
            throw RangeError("|varrho r T| = " + std::to_string(std::abs(decay * T)) +
                             " exceeds 700");
        }
        const double v = m.v();
        const double s2 = m.sigma * m.sigma;
        const double gap = agents.ratio() - 1.0;
        coeff_ = vartheta_ * vartheta_ * v * v * gap * gap / (2.0 * s2);
        growth_.resize(grid_.size());
        for (std::size_t i = 0; i < grid_.size(); ++i) growth_[i] = std::exp(decay * (T - grid_.t(i)));
        lower_exponent_ = -agents.follower.alpha * agents.follower.x0 * std::exp(m.r * T) -
                          v * v * T / (2.0 * s2);
        lower_ = checked_exp(lower_exponent_, "eta lower bound");
        buffer_.resize(grid_.size());
    }

    double lower() const noexcept { return lower_; }
    double coeff() const noexcept { return coeff_; }
    double vartheta() const noexcept { return vartheta_; }
    const TimeGrid& grid() const noexcept { return grid_; }

    /// Integral in the exponent of f at xi.
    double exponent_integral(double xi) const {
        if (coeff_ == 0.0) return 0.0;
        for (std::size_t i = 0; i < growth_.size(); ++i) {
            const double d = xi * growth_[i] + vartheta_;
            buffer_[i] = coeff_ / (d * d);
        }
        return simpson(buffer_, grid_.step());
    }

    double operator()(double xi) const {
        return checked_exp(lower_exponent_ + exponent_integral(xi), "iteration map");
    }

private:
    TimeGrid grid_;
    double vartheta_;
    double coeff_ = 0.0;
    double lower_exponent_ = 0.0;
    double lower_ = 0.0;
    std::vector<double> growth_;
    mutable std::vector<double> buffer_;
};

}  // namespace detail

inline double iteration_map(double xi, const MarketParams& m, const AgentPair& agents,
                            const HerdConfig& herd) {
    if (!(xi > 0.0)) throw ValidationError("iteration map: candidate must be positive");
    return detail::EtaMap(m, agents, herd)(xi);
}

inline EtaBounds eta_bounds(const MarketParams& m, const AgentPair& agents, const HerdConfig& herd) {
    const detail::EtaMap f(m, agents, herd);
    return {f.lower(), f(f.lower())};
}

/// Sufficient condition for the fixed-point iteration to contract:
///   vartheta^2 v^2 (a1 - a2)^2 eta_up / (a2^2 sigma^2 eta_lo^3) * (1 - e^{-2 varrho r T}) / (2 varrho r) <= 1.
/// At varrho r = 0 the last factor is its limit T.
inline ContractionCheck check_contraction(const MarketParams& m, const AgentPair& agents,
                                          const HerdConfig& herd) {
    const auto b = eta_bounds(m, agents, herd);
    const double vt = herd.vartheta(agents, m);
    const double v = m.v();
    const double s2 = m.sigma * m.sigma;
    const double da = agents.follower.alpha - agents.leader.alpha;
    const double a2 = agents.leader.alpha;
    const double z = herd.varrho() * m.r;
    const double T = herd.horizon();
    const double factor = z == 0.0 ? T : -std::expm1(-2.0 * z * T) / (2.0 * z);
    ContractionCheck out;
    out.value = vt * vt * v * v * da * da * b.upper / (a2 * a2 * s2 * b.lower * b.lower * b.lower) * factor;
    out.holds = out.value <= 1.0;
    return out;
}

inline constexpr std::size_t kMaxSolverSteps = 10000;

/// Integral constant eta: the fixed point of the iteration map on [eta_lower, eta_upper].
///
/// With SolveMethod::automatic, the plain iteration (started at eta_lower) runs
/// when the contraction condition holds; otherwise the strictly decreasing
/// g(xi) = f(xi) - xi is bisected on the bracket.
inline EtaSolution solve_eta(const MarketParams& m, const AgentPair& agents, const HerdConfig& herd,
                             SolveMethod method = SolveMethod::automatic) {
    const detail::EtaMap f(m, agents, herd);
    const double tol = herd.tol();

    EtaSolution sol;
    sol.eta_lower = f.lower();
    sol.eta_upper = f(f.lower());
    sol.contraction_ok = check_contraction(m, agents, herd).holds;
    if (method == SolveMethod::automatic) {
        method = sol.contraction_ok ? SolveMethod::fixed_point : SolveMethod::bisection;
    }
    sol.method = method;

    if (method == SolveMethod::fixed_point) {
        double eta = sol.eta_lower;
        double next = eta;
        std::size_t k = 0;
        while (true) {
            if (k >= kMaxSolverSteps) {
                throw SolverError("eta fixed-point iteration did not converge in " +
                                  std::to_string(kMaxSolverSteps) + " steps", eta);
            }
            next = f(eta);
            ++k;
            const double delta = std::abs(next - eta);
            eta = next;
            if (delta < tol) {
                sol.residual = std::abs(f(eta) - eta);
                if (sol.residual <= tol) break;
            }
        }
        sol.eta = eta;
        sol.iterations = k;
        return sol;
    }

    // g(lo) >= 0 >= g(hi) by construction of the bracket.
    double lo = sol.eta_lower;
    double hi = sol.eta_upper;
    double mid = lo;
    double g = f(lo) - lo;
    std::size_t k = 0;
    while (std::abs(g) > tol) {
        if (k >= kMaxSolverSteps) {
            throw SolverError("eta bisection did not converge in " +
                              std::to_string(kMaxSolverSteps) + " steps", mid);
        }
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            // Bracket collapsed to adjacent doubles; take the better end.
            const double glo = std::abs(f(lo) - lo);
            const double ghi = std::abs(f(hi) - hi);
            mid = glo <= ghi ? lo : hi;
            g = std::min(glo, ghi);
            if (g > tol) {
                throw SolverError("eta bisection stalled with residual " + std::to_string(g), mid);
            }
            break;
        }
        g = f(mid) - mid;
        ++k;
        if (g > 0.0) lo = mid;
        else hi = mid;
    }
    sol.eta = mid;
    sol.iterations = k;
    sol.residual = std::abs(f(mid) - mid);
    return sol;
}

/// Multiplier of the leader's rational decision in the optimal decision:
///   (eta a2 s^2 e^{varrho r (T-t)} + theta) / (eta a1 s^2 e^{varrho r (T-t)} + theta).
inline double herd_multiplier(double eta, const MarketParams& m, const AgentPair& agents,
                              const HerdConfig& herd, double t) {
    const double s2 = m.sigma * m.sigma;
    const double e = eta * std::exp(herd.varrho() * m.r * (herd.horizon() - t));
    return (e * agents.leader.alpha * s2 + herd.theta()) /
           (e * agents.follower.alpha * s2 + herd.theta());
}

inline DecisionCurve optimal_decision(const MarketParams& m, const AgentPair& agents,
                                      const HerdConfig& herd, const EtaSolution& sol,
                                      const TimeGrid& grid) {
    require_valid(m);
    require_valid(agents);
    if (grid.horizon() != herd.horizon()) {
        throw ValidationError("optimal decision: grid horizon differs from the herd horizon");
    }
    if (!(sol.eta > 0.0) || !std::isfinite(sol.eta)) {
        throw ValidationError("optimal decision: eta must be positive and finite");
    }
    std::vector<double> p(grid.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double t = grid.t(i);
        p[i] = herd_multiplier(sol.eta, m, agents, herd, t) *
               rational_value(m, agents.leader.alpha, grid.horizon(), t);
    }
    return {grid, std::move(p)};
}

inline DecisionCurve optimal_decision(const MarketParams& m, const AgentPair& agents,
                                      const HerdConfig& herd, const EtaSolution& sol) {
    return optimal_decision(m, agents, herd, sol, herd.grid());
}

}  // namespace herd
