#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "herd/errors.hpp"

namespace herd {

/// Uniform partition of [0, T] into an even number of intervals.
///
/// Composite Simpson needs an even interval count, so an odd request is
/// refined to the next even count.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t intervals) : horizon_(horizon), n_(intervals) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw ValidationError("time grid: horizon must be positive and finite");
        }
        if (n_ < 2) n_ = 2;
        if (n_ % 2 != 0) ++n_;
    }

    double horizon() const noexcept { return horizon_; }
    std::size_t intervals() const noexcept { return n_; }
    std::size_t size() const noexcept { return n_ + 1; }
    double step() const noexcept { return horizon_ / static_cast<double>(n_); }

    // Computed from the index rather than accumulated so t(n) == T exactly.
    double t(std::size_t i) const noexcept {
        return i == n_ ? horizon_ : horizon_ * static_cast<double>(i) / static_cast<double>(n_);
    }

    std::vector<double> points() const {
        std::vector<double> out(size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = t(i);
        return out;
    }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
        return a.horizon_ == b.horizon_ && a.n_ == b.n_;
    }

private:
    double horizon_;
    std::size_t n_;
};

/// Composite Simpson rule over samples on a uniform grid (even interval count).
inline double simpson(std::span<const double> samples, double h) {
    const std::size_t n = samples.size() - 1;
    if (samples.size() < 3 || n % 2 != 0) {
        throw ValidationError("simpson: need an even number of intervals, got " +
                              std::to_string(samples.empty() ? 0 : n));
    }
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t i = 1; i < n; i += 2) odd += samples[i];
    for (std::size_t i = 2; i < n; i += 2) even += samples[i];
    return h / 3.0 * (samples.front() + 4.0 * odd + 2.0 * even + samples.back());
}

/// Integrates f over the grid's interval with composite Simpson.
template <class F>
double integrate(const TimeGrid& grid, F&& f) {
    const std::size_t n = grid.intervals();
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t i = 1; i < n; i += 2) odd += f(grid.t(i));
    for (std::size_t i = 2; i < n; i += 2) even += f(grid.t(i));
    return grid.step() / 3.0 * (f(grid.t(0)) + 4.0 * odd + 2.0 * even + f(grid.t(n)));
}

/// Piecewise-linear interpolation of samples on a uniform grid; clamps outside [0, T].
inline double interpolate(const TimeGrid& grid, std::span<const double> values, double t) {
    if (t <= 0.0) return values.front();
    if (t >= grid.horizon()) return values.back();
    const double s = t / grid.step();
    const auto i = std::min(static_cast<std::size_t>(s), grid.intervals() - 1);
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * values[i] + w * values[i + 1];
}

}  // namespace herd
