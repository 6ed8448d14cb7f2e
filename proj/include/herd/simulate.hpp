#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <thread>
#include <vector>

#include "herd/errors.hpp"
#include "herd/market.hpp"
#include "herd/merton.hpp"

namespace herd {

struct SimulationSpec {
    std::size_t n_paths = 100000;
    std::size_t n_steps = 1000;
    std::uint64_t seed = 1;
    bool keep_samples = true;
    /// Worker threads; 0 picks std::thread::hardware_concurrency().
    unsigned threads = 0;
};

struct SimulationResult {
    double mean_terminal_wealth = 0.0;
    double var_terminal_wealth = 0.0;
    double mean_utility = 0.0;
    double std_error_utility = 0.0;
    std::vector<double> terminal_samples;
};

struct UtilityEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of path `i`: a pure function of (seed, i), so scheduling cannot change it.
inline std::uint64_t path_seed(std::uint64_t seed, std::uint64_t path) {
    return splitmix64(splitmix64(seed) ^ (path * 0xd1b54a32d192ed03ULL));
}

/// Mean and unbiased variance with a fixed left-to-right Neumaier-compensated sum.
inline std::pair<double, double> mean_and_variance(const std::vector<double>& xs) {
    const auto n = static_cast<double>(xs.size());
    double sum = 0.0;
    double c = 0.0;
    for (double x : xs) {
        const double t = sum + x;
        c += std::abs(sum) >= std::abs(x) ? (sum - t) + x : (x - t) + sum;
        sum = t;
    }
    const double mean = (sum + c) / n;
    if (xs.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    c = 0.0;
    for (double x : xs) {
        const double d = (x - mean) * (x - mean);
        const double t = ss + d;
        c += ss >= d ? (ss - t) + d : (d - t) + ss;
        ss = t;
    }
    return {mean, (ss + c) / (n - 1.0)};
}

}  // namespace detail

inline UtilityEstimate mc_expected_utility(const std::vector<double>& terminal_samples, double alpha) {
    if (terminal_samples.empty()) throw ValidationError("mc utility: no terminal samples retained");
    if (!(alpha > 0.0)) throw ValidationError("mc utility: risk aversion must be positive");
    std::vector<double> u(terminal_samples.size());
    std::transform(terminal_samples.begin(), terminal_samples.end(), u.begin(),
                   [alpha](double x) { return cara_utility(alpha, x); });
    const auto [mean, var] = detail::mean_and_variance(u);
    return {mean, std::sqrt(var / static_cast<double>(u.size()))};
}

inline UtilityEstimate mc_expected_utility(const SimulationResult& result, double alpha) {
    return mc_expected_utility(result.terminal_samples, alpha);
}

/// Euler-Maruyama paths of dX = (r X + v P) dt + sigma P dW from X(0) = agent.x0.
///
/// The decision is interpolated linearly onto the simulation step times. Path i
/// draws from its own generator seeded by (spec.seed, i) and the reduction runs
/// in path order, so results are bit-identical for any thread count.
inline SimulationResult simulate_wealth(const MarketParams& m, const AgentProfile& agent,
                                        const DecisionCurve& decision, const SimulationSpec& spec) {
    require_valid(m);
    require_valid(agent);
    if (spec.n_paths < 1 || spec.n_steps < 1) {
        throw ValidationError("simulation: need at least one path and one step");
    }
    const double T = decision.grid.horizon();
    const double dt = T / static_cast<double>(spec.n_steps);
    const double sqrt_dt = std::sqrt(dt);

    std::vector<double> hold(spec.n_steps);
    for (std::size_t k = 0; k < spec.n_steps; ++k) hold[k] = decision.at(static_cast<double>(k) * dt);

    std::vector<double> terminal(spec.n_paths);
    auto run = [&](std::size_t begin, std::size_t end) {
        std::normal_distribution<double> normal;
        for (std::size_t i = begin; i < end; ++i) {
            std::mt19937_64 rng(detail::path_seed(spec.seed, i));
            normal.reset();
            double x = agent.x0;
            for (std::size_t k = 0; k < spec.n_steps; ++k) {
                x += (m.r * x + m.v() * hold[k]) * dt + m.sigma * hold[k] * sqrt_dt * normal(rng);
            }
            terminal[i] = x;
        }
    };

    unsigned workers = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, spec.n_paths));
    if (workers <= 1) {
        run(0, spec.n_paths);
    } else {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (spec.n_paths + workers - 1) / workers;
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t b = w * chunk;
            const std::size_t e = std::min(spec.n_paths, b + chunk);
            if (b < e) pool.emplace_back(run, b, e);
        }
    }

    SimulationResult res;
    std::tie(res.mean_terminal_wealth, res.var_terminal_wealth) = detail::mean_and_variance(terminal);
    const auto u = mc_expected_utility(terminal, agent.alpha);
    res.mean_utility = u.estimate;
    res.std_error_utility = u.std_error;
    if (spec.keep_samples) res.terminal_samples = std::move(terminal);
    return res;
}

}  // namespace herd
