#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "herd/errors.hpp"

namespace herd {

/// Risk-free rate r, appreciation rate mu and volatility sigma, all per year.
/// The excess return v = mu - r is always derived.
struct MarketParams {
    double r = 0.0;
    double mu = 0.0;
    double sigma = 0.0;

    double v() const noexcept { return mu - r; }
};

struct MarketValidation {
    bool valid = true;
    std::vector<std::string> violations;
};

inline MarketValidation validate_market(const MarketParams& m) {
    MarketValidation out;
    if (!std::isfinite(m.r) || !std::isfinite(m.mu) || !std::isfinite(m.sigma)) {
        out.violations.emplace_back("non-finite parameter");
    }
    if (!(m.sigma > 0.0)) out.violations.emplace_back("sigma <= 0");
    if (!(m.v() > 0.0)) out.violations.emplace_back("v <= 0");
    out.valid = out.violations.empty();
    return out;
}

inline void require_valid(const MarketParams& m) {
    const auto check = validate_market(m);
    if (check.valid) return;
    std::string msg = "invalid market:";
    for (const auto& v : check.violations) msg += " " + v + ";";
    throw ValidationError(msg);
}

/// Daily (or other regular) closing prices. dt is the year fraction per step.
struct PriceSeries {
    std::vector<std::chrono::sys_days> dates;
    std::vector<double> closes;
    double dt = 1.0 / 252.0;
};

inline void validate_series(const PriceSeries& s) {
    if (s.dates.size() != s.closes.size()) {
        throw ValidationError("price series: dates and closes differ in length");
    }
    if (s.closes.size() < 3) {
        throw ValidationError("price series: need at least 3 prices (2 log returns), got " +
                              std::to_string(s.closes.size()));
    }
    if (!(s.dt > 0.0)) throw ValidationError("price series: dt must be positive");
    for (std::size_t i = 0; i < s.closes.size(); ++i) {
        if (!(s.closes[i] > 0.0) || !std::isfinite(s.closes[i])) {
            throw ValidationError("price series: non-positive price at index " + std::to_string(i));
        }
        if (i > 0 && !(s.dates[i - 1] < s.dates[i])) {
            throw ValidationError("price series: dates not strictly increasing at index " +
                                  std::to_string(i));
        }
    }
}

/// Maximum-likelihood GBM fit on log returns:
///   sigma = sd(log returns) / sqrt(dt),  mu = mean(log returns) / dt + sigma^2 / 2.
inline MarketParams estimate_gbm_params(const PriceSeries& series, double r) {
    validate_series(series);
    const std::size_t n = series.closes.size() - 1;
    std::vector<double> ret(n);
    for (std::size_t i = 0; i < n; ++i) ret[i] = std::log(series.closes[i + 1] / series.closes[i]);

    const double mean = std::accumulate(ret.begin(), ret.end(), 0.0) / static_cast<double>(n);
    double ss = 0.0;
    for (double x : ret) ss += (x - mean) * (x - mean);
    const double var = ss / static_cast<double>(n - 1);

    MarketParams out;
    out.r = r;
    out.sigma = std::sqrt(var / series.dt);
    out.mu = mean / series.dt + 0.5 * out.sigma * out.sigma;
    if (!(out.sigma > 0.0) || !(out.v() > 0.0)) {
        throw ValidationError("estimated market violates assumptions (v <= 0 or sigma = 0): mu=" +
                              std::to_string(out.mu) + " sigma=" + std::to_string(out.sigma) +
                              " r=" + std::to_string(r));
    }
    return out;
}

/// Exact lognormal GBM path with steps+1 closes on consecutive calendar days.
inline PriceSeries simulate_gbm_series(double mu, double sigma, double dt, std::size_t steps,
                                       double s0, std::uint64_t seed,
                                       std::chrono::sys_days start = std::chrono::sys_days{
                                           std::chrono::year{2000} / 1 / 1}) {
    PriceSeries s;
    s.dt = dt;
    s.dates.reserve(steps + 1);
    s.closes.reserve(steps + 1);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const double drift = (mu - 0.5 * sigma * sigma) * dt;
    const double vol = sigma * std::sqrt(dt);
    double log_s = std::log(s0);
    for (std::size_t k = 0; k <= steps; ++k) {
        s.dates.push_back(start + std::chrono::days{static_cast<int>(k)});
        s.closes.push_back(std::exp(log_s));
        log_s += drift + vol * normal(rng);
    }
    return s;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline bool parse_iso_date(std::string_view s, std::chrono::sys_days& out) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    auto ok = [](std::string_view part, auto& value) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        return ec == std::errc{} && p == part.data() + part.size();
    };
    if (!ok(s.substr(0, 4), y) || !ok(s.substr(5, 2), m) || !ok(s.substr(8, 2), d)) return false;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) return false;
    out = std::chrono::sys_days{ymd};
    return true;
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty()) return false;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && p == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Reads a `date,close` CSV (header required). Any unparsable row aborts with its line number.
inline PriceSeries read_price_csv(std::istream& in, double dt = 1.0 / 252.0) {
    PriceSeries s;
    s.dt = dt;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view row = detail::trim(line);
        if (row.empty()) continue;
        const auto comma = row.find(',');
        if (comma == std::string_view::npos || row.find(',', comma + 1) != std::string_view::npos) {
            throw ValidationError("price csv line " + std::to_string(line_no) +
                                  ": expected exactly two columns");
        }
        const auto c0 = detail::trim(row.substr(0, comma));
        const auto c1 = detail::trim(row.substr(comma + 1));
        if (!header_seen) {
            if (c0 != "date" || c1 != "close") {
                throw ValidationError("price csv line " + std::to_string(line_no) +
                                      ": header must be 'date,close'");
            }
            header_seen = true;
            continue;
        }
        std::chrono::sys_days date;
        double close = 0.0;
        if (!detail::parse_iso_date(c0, date)) {
            throw ValidationError("price csv line " + std::to_string(line_no) +
                                  ": unparsable date '" + std::string(c0) + "'");
        }
        if (!detail::parse_double(c1, close)) {
            throw ValidationError("price csv line " + std::to_string(line_no) +
                                  ": unparsable close '" + std::string(c1) + "'");
        }
        if (!s.dates.empty() && !(s.dates.back() < date)) {
            throw ValidationError("price csv line " + std::to_string(line_no) +
                                  ": dates must be strictly increasing");
        }
        if (!(close > 0.0)) {
            throw ValidationError("price csv line " + std::to_string(line_no) +
                                  ": close must be positive");
        }
        s.dates.push_back(date);
        s.closes.push_back(close);
    }
    if (!header_seen) throw ValidationError("price csv: missing header");
    validate_series(s);
    return s;
}

inline PriceSeries read_price_csv(const std::string& path, double dt = 1.0 / 252.0) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open price csv '" + path + "'");
    return read_price_csv(in, dt);
}

inline std::string format_iso_date(std::chrono::sys_days d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace herd
