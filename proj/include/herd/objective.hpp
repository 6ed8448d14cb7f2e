#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "herd/errors.hpp"
#include "herd/grid.hpp"
#include "herd/market.hpp"
#include "herd/merton.hpp"
#include "herd/solver.hpp"

namespace herd {

/// D = 1/2 int_0^T e^{rho r (T-t)} (P1 - P2)^2 dt. rho = 0 gives the plain L2 distance.
inline double average_deviation(const DecisionCurve& p1, const DecisionCurve& p2, double rho, double r) {
    if (!(p1.grid == p2.grid)) throw ValidationError("average deviation: curves on different grids");
    if (!(rho >= 0.0)) throw ValidationError("average deviation: rho must be >= 0");
    const auto& g = p1.grid;
    std::vector<double> f(g.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double d = p1.values[i] - p2.values[i];
        f[i] = std::exp(rho * r * (g.horizon() - g.t(i))) * d * d;
    }
    return 0.5 * simpson(f, g.step());
}

struct ObjectiveBreakdown {
    double expected_utility = 0.0;
    double avg_deviation = 0.0;
    double total = 0.0;
};

/// J[P1] = E u(X1(T)) - theta D[P1 || leader's rational decision].
inline ObjectiveBreakdown objective_value(const DecisionCurve& p1, const MarketParams& m,
                                          const AgentPair& agents, const HerdConfig& herd) {
    const auto leader = rational_decision(m, agents.leader.alpha, p1.grid);
    ObjectiveBreakdown out;
    out.expected_utility = expected_cara_utility(m, agents.follower.alpha, agents.follower.x0, p1);
    out.avg_deviation = average_deviation(p1, leader, herd.rho(), m.r);
    out.total = out.expected_utility - herd.theta() * out.avg_deviation;
    return out;
}

/// Smooth unit (sup-norm) perturbation directions on `grid`: a truncated
/// Fourier basis first, then seeded random Catmull-Rom splines.
inline std::vector<std::vector<double>> perturbation_directions(const TimeGrid& grid, std::size_t count,
                                                                std::uint64_t seed = 7) {
    constexpr std::size_t kFourier = 12;
    constexpr std::size_t kKnots = 9;
    std::vector<std::vector<double>> out;
    out.reserve(count);
    const double T = grid.horizon();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);

    auto normalize = [](std::vector<double>& h) {
        double norm = 0.0;
        for (double x : h) norm = std::max(norm, std::abs(x));
        if (norm > 0.0) for (double& x : h) x /= norm;
    };

    for (std::size_t k = 0; k < count; ++k) {
        std::vector<double> h(grid.size());
        if (k < kFourier) {
            // 1, cos(pi t/T), sin(pi t/T), cos(2 pi t/T), ...
            const double freq = static_cast<double>((k + 1) / 2) * std::numbers::pi / T;
            for (std::size_t i = 0; i < h.size(); ++i) {
                const double t = grid.t(i);
                h[i] = k == 0 ? 1.0 : (k % 2 == 1 ? std::cos(freq * t) : std::sin(freq * t));
            }
        } else {
            std::vector<double> knots(kKnots + 2);
            for (double& y : knots) y = unit(rng);
            const double span = T / static_cast<double>(kKnots - 1);
            for (std::size_t i = 0; i < h.size(); ++i) {
                const double s = grid.t(i) / span;
                const auto j = std::min(static_cast<std::size_t>(s), kKnots - 2);
                const double u = s - static_cast<double>(j);
                // knots[j + 1] is the value at knot j; knots[0] and knots[kKnots + 1] are ghosts.
                const double p0 = knots[j], p1 = knots[j + 1], p2 = knots[j + 2], p3 = knots[j + 3];
                h[i] = 0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u * u +
                              (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u * u * u);
            }
        }
        normalize(h);
        out.push_back(std::move(h));
    }
    return out;
}

struct FirstVariationReport {
    double max_abs_derivative = 0.0;
    /// Largest J(p + eps h) + J(p - eps h) - 2 J(p) over the directions; negative means concave.
    double max_second_difference = 0.0;
    bool concave = true;
    double epsilon = 0.0;
};

/// Central-difference directional derivatives of J at `p_star` along smooth unit directions.
/// `relative_epsilon` is scaled by the curve's sup-norm.
inline FirstVariationReport first_variation_test(const DecisionCurve& p_star, const MarketParams& m,
                                                 const AgentPair& agents, const HerdConfig& herd,
                                                 std::size_t directions = 100,
                                                 double relative_epsilon = 1e-5,
                                                 std::uint64_t seed = 7) {
    double scale = 1.0;
    for (double x : p_star.values) scale = std::max(scale, std::abs(x));
    const double eps = relative_epsilon * scale;
    const double j0 = objective_value(p_star, m, agents, herd).total;

    FirstVariationReport rep;
    rep.epsilon = eps;
    rep.max_second_difference = -std::numeric_limits<double>::infinity();
    for (const auto& h : perturbation_directions(p_star.grid, directions, seed)) {
        std::vector<double> plus = p_star.values;
        std::vector<double> minus = p_star.values;
        for (std::size_t i = 0; i < h.size(); ++i) {
            plus[i] += eps * h[i];
            minus[i] -= eps * h[i];
        }
        const double jp = objective_value(DecisionCurve(p_star.grid, std::move(plus)), m, agents, herd).total;
        const double jm = objective_value(DecisionCurve(p_star.grid, std::move(minus)), m, agents, herd).total;
        rep.max_abs_derivative = std::max(rep.max_abs_derivative, std::abs(jp - jm) / (2.0 * eps));
        const double second = jp + jm - 2.0 * j0;
        rep.max_second_difference = std::max(rep.max_second_difference, second);
        if (!(second < 0.0)) rep.concave = false;
    }
    return rep;
}

namespace detail {

/// J on a fixed fine grid with the quadrature weights folded into per-point factors.
class ObjectiveEvaluator {
public:
    ObjectiveEvaluator(const MarketParams& m, const AgentPair& agents, const HerdConfig& herd)
        : grid_(herd.grid()), alpha_(agents.follower.alpha), theta_(herd.theta()) {
        const double T = grid_.horizon();
        const std::size_t n = grid_.intervals();
        const double h = grid_.step();
        mean_.resize(grid_.size());
        var_.resize(grid_.size());
        dev_.resize(grid_.size());
        leader_.resize(grid_.size());
        for (std::size_t i = 0; i <= n; ++i) {
            const double w = h / 3.0 * (i == 0 || i == n ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0));
            const double t = grid_.t(i);
            const double growth = std::exp(m.r * (T - t));
            mean_[i] = w * m.v() * growth;
            var_[i] = w * m.sigma * m.sigma * growth * growth;
            dev_[i] = w * std::exp(herd.rho() * m.r * (T - t));
            leader_[i] = rational_value(m, agents.leader.alpha, T, t);
        }
        base_mean_ = agents.follower.x0 * std::exp(m.r * T);
    }

    const TimeGrid& grid() const noexcept { return grid_; }

    double operator()(std::span<const double> p) const {
        double mean = base_mean_;
        double var = 0.0;
        double dev = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            mean += mean_[i] * p[i];
            var += var_[i] * p[i] * p[i];
            const double d = p[i] - leader_[i];
            dev += dev_[i] * d * d;
        }
        const double exponent = -alpha_ * mean + 0.5 * alpha_ * alpha_ * var;
        return -checked_exp(exponent, "objective") / alpha_ - 0.5 * theta_ * dev;
    }

private:
    TimeGrid grid_;
    double alpha_;
    double theta_;
    double base_mean_ = 0.0;
    std::vector<double> mean_, var_, dev_, leader_;
};

/// Hat-function basis of `nodes` equally spaced knots sampled on a fine grid.
class HatBasis {
public:
    HatBasis(const TimeGrid& fine, std::size_t nodes) : nodes_(nodes) {
        const double span = fine.horizon() / static_cast<double>(nodes - 1);
        left_.resize(fine.size());
        weight_.resize(fine.size());
        for (std::size_t i = 0; i < fine.size(); ++i) {
            const double s = fine.t(i) / span;
            const auto j = std::min(static_cast<std::size_t>(s), nodes - 2);
            left_[i] = j;
            weight_[i] = s - static_cast<double>(j);
        }
    }

    void expand(std::span<const double> coeffs, std::vector<double>& out) const {
        out.resize(left_.size());
        for (std::size_t i = 0; i < left_.size(); ++i) {
            const double w = weight_[i];
            out[i] = (1.0 - w) * coeffs[left_[i]] + w * coeffs[left_[i] + 1];
        }
    }

    std::size_t nodes() const noexcept { return nodes_; }

private:
    std::size_t nodes_;
    std::vector<std::size_t> left_;
    std::vector<double> weight_;
};

}  // namespace detail

struct BruteForceResult {
    DecisionCurve curve;       ///< argmax expanded onto the herd grid
    std::vector<double> nodes; ///< coefficients at the coarse knots
    double objective = 0.0;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
};

struct BruteForceOptions {
    std::size_t max_iterations = 5000;
    /// Stop once the largest predicted knot update |g_j / c_j| falls below this.
    double step_tol = 1e-7;
    double fd_step = 1e-4;
};

/// Maximizes J over piecewise-linear curves with `coarse_n` knots, starting
/// from the zero curve.
///
/// Each iteration estimates the gradient g and the diagonal curvature c of J
/// in the knot coordinates by central differences, scales the ascent
/// direction by 1/c, and backtracks until the Armijo condition holds.
/// Independent of the closed-form optimum; used only to check it.
inline BruteForceResult brute_force_optimize(const MarketParams& m, const AgentPair& agents,
                                             const HerdConfig& herd, std::size_t coarse_n,
                                             const BruteForceOptions& opt = {}) {
    if (coarse_n < 2 || coarse_n > 200) {
        throw ValidationError("brute force: coarse grid size must be in [2, 200]");
    }
    require_valid(m);
    require_valid(agents);
    const detail::ObjectiveEvaluator J(m, agents, herd);
    const detail::HatBasis basis(J.grid(), coarse_n);

    std::vector<double> u(coarse_n, 0.0);
    std::vector<double> fine;
    auto eval = [&](const std::vector<double>& c) {
        basis.expand(c, fine);
        return J(fine);
    };

    std::vector<double> grad(coarse_n);
    std::vector<double> dir(coarse_n);
    std::vector<double> trial(coarse_n);
    double value = eval(u);
    BruteForceResult res{DecisionCurve::zero(J.grid()), {}, value, 0, 0.0, false};
    const double h = opt.fd_step;

    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        double slope = 0.0;
        double max_update = 0.0;
        double gmax = 0.0;
        for (std::size_t j = 0; j < coarse_n; ++j) {
            const double saved = u[j];
            u[j] = saved + h;
            const double up = eval(u);
            u[j] = saved - h;
            const double down = eval(u);
            u[j] = saved;
            grad[j] = (up - down) / (2.0 * h);
            const double curvature = -(up + down - 2.0 * value) / (h * h);
            // J is strictly concave, so curvature > 0 unless swamped by rounding.
            dir[j] = curvature > 0.0 ? grad[j] / curvature : grad[j];
            slope += grad[j] * dir[j];
            max_update = std::max(max_update, std::abs(dir[j]));
            gmax = std::max(gmax, std::abs(grad[j]));
        }
        res.iterations = it + 1;
        res.gradient_norm = gmax;
        // Second clause: the predicted gain is below the resolution of J itself.
        if (max_update <= opt.step_tol ||
            slope <= 16.0 * std::numeric_limits<double>::epsilon() * std::abs(value)) {
            res.converged = true;
            break;
        }

        double step = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t j = 0; j < coarse_n; ++j) trial[j] = u[j] + step * dir[j];
            const double cand = eval(trial);
            if (cand >= value + 1e-4 * step * slope) {
                u.swap(trial);
                value = cand;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }

    basis.expand(u, fine);
    res.curve = DecisionCurve(J.grid(), fine);
    res.nodes = u;
    res.objective = value;
    return res;
}

}  // namespace herd
