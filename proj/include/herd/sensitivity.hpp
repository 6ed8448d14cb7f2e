#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "herd/errors.hpp"
#include "herd/market.hpp"
#include "herd/merton.hpp"
#include "herd/opinion.hpp"
#include "herd/solver.hpp"

namespace herd {

/// Everything one solve needs.
struct Scenario {
    MarketParams market;
    AgentPair agents;
    HerdConfig herd;
};

enum class Parameter { theta, vartheta, x1, v, sigma, rho };

inline const char* to_string(Parameter p) {
    switch (p) {
        case Parameter::theta: return "theta";
        case Parameter::vartheta: return "vartheta";
        case Parameter::x1: return "x1";
        case Parameter::v: return "v";
        case Parameter::sigma: return "sigma";
        case Parameter::rho: return "rho";
    }
    return "?";
}

inline std::optional<Parameter> parse_parameter(const std::string& s) {
    for (auto p : {Parameter::theta, Parameter::vartheta, Parameter::x1, Parameter::v,
                   Parameter::sigma, Parameter::rho}) {
        if (s == to_string(p)) return p;
    }
    return std::nullopt;
}

inline double parameter_value(const Scenario& s, Parameter p) {
    switch (p) {
        case Parameter::theta: return s.herd.theta();
        case Parameter::vartheta: return s.herd.vartheta(s.agents, s.market);
        case Parameter::x1: return s.agents.follower.x0;
        case Parameter::v: return s.market.v();
        case Parameter::sigma: return s.market.sigma;
        case Parameter::rho: return s.herd.rho();
    }
    return 0.0;
}

/// Copy of `s` with one parameter replaced. v moves mu with r fixed; sigma
/// keeps theta fixed (so vartheta moves with it).
inline Scenario with_parameter(Scenario s, Parameter p, double value) {
    switch (p) {
        case Parameter::theta: s.herd = s.herd.with_theta(value); break;
        case Parameter::vartheta:
            s.herd = s.herd.with_theta(value * s.agents.follower.alpha * s.market.sigma * s.market.sigma);
            break;
        case Parameter::x1: s.agents.follower.x0 = value; break;
        case Parameter::v: s.market.mu = s.market.r + value; break;
        case Parameter::sigma: s.market.sigma = value; break;
        case Parameter::rho: s.herd = s.herd.with_rho(value); break;
    }
    require_valid(s.market);
    require_valid(s.agents);
    return s;
}

inline EtaSolution solve(const Scenario& s) { return solve_eta(s.market, s.agents, s.herd); }

inline double opinion_at(const Scenario& s, double eta, double t) {
    const double e = eta * std::exp(s.herd.varrho() * s.market.r * (s.herd.horizon() - t));
    return e / (e + s.herd.vartheta(s.agents, s.market));
}

/// Sign checks of finite-difference derivatives against a comparative-statics claim.
struct SensitivityReport {
    Parameter parameter = Parameter::theta;
    std::string quantity;           ///< "eta" or "z1"
    std::vector<double> probes;     ///< probe times (empty for eta)
    std::vector<double> derivative; ///< central differences at `step`
    std::vector<double> derivative_half; ///< same at step / 2
    double step = 0.0;
    int expected_sign = 0;
    bool condition_met = false;
    bool stable = false; ///< every estimate keeps its sign under step halving
    bool pass = false;   ///< only ever true when condition_met
    std::string note;
};

namespace detail {

inline double fd_step(double value, double relative) {
    return std::max(relative * std::abs(value), 1e-6);
}

inline void finish(SensitivityReport& rep) {
    rep.stable = true;
    bool signs_ok = true;
    for (std::size_t i = 0; i < rep.derivative.size(); ++i) {
        const double a = rep.derivative[i];
        const double b = rep.derivative_half[i];
        if (!(a * b > 0.0)) rep.stable = false;
        if (!(a * rep.expected_sign > 0.0 && b * rep.expected_sign > 0.0)) signs_ok = false;
    }
    rep.pass = rep.condition_met && rep.stable && signs_ok;
}

/// Central difference of `quantity(scenario)` in parameter p, at step h.
template <class Q>
std::vector<double> central(const Scenario& base, Parameter p, double h, Q&& quantity) {
    const double x = parameter_value(base, p);
    const auto up = quantity(with_parameter(base, p, x + h));
    const auto down = quantity(with_parameter(base, p, x - h));
    std::vector<double> d(up.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (up[i] - down[i]) / (2.0 * h);
    return d;
}

}  // namespace detail

/// Whether the follower/leader risk-aversion ratio satisfies the hypothesis
/// under which the sign of the derivative in `p` is claimed.
inline bool hypothesis_holds(const AgentPair& agents, Parameter p) {
    const double q = agents.ratio();
    switch (p) {
        case Parameter::v: return q > 0.0 && q < 2.0;
        case Parameter::sigma: {
            const double w = std::sqrt(3.0) / 3.0;
            return q >= 1.0 - w && q <= 1.0 + w;
        }
        default: return true;
    }
}

inline std::string hypothesis_text(Parameter p) {
    switch (p) {
        case Parameter::v: return "alpha1/alpha2 in (0, 2)";
        case Parameter::sigma: return "alpha1/alpha2 in [1 - sqrt(3)/3, 1 + sqrt(3)/3]";
        default: return "none";
    }
}

/// dZ1(t)/dtheta < 0 at every probe time.
inline SensitivityReport sensitivity_theta(const Scenario& base, const std::vector<double>& t_probe,
                                           double relative_step = 1e-4) {
    SensitivityReport rep;
    rep.parameter = Parameter::theta;
    rep.quantity = "z1";
    rep.probes = t_probe;
    rep.expected_sign = -1;
    rep.condition_met = true;
    rep.step = detail::fd_step(base.herd.theta(), relative_step);
    auto z = [&](const Scenario& s) {
        const double eta = solve(s).eta;
        std::vector<double> out;
        for (double t : t_probe) out.push_back(opinion_at(s, eta, t));
        return out;
    };
    rep.derivative = detail::central(base, Parameter::theta, rep.step, z);
    rep.derivative_half = detail::central(base, Parameter::theta, 0.5 * rep.step, z);
    detail::finish(rep);
    return rep;
}

inline int expected_sign(Parameter p) {
    switch (p) {
        case Parameter::x1:
        case Parameter::v: return -1;
        case Parameter::sigma: return +1;
        default: throw ValidationError("no sign claim for parameter " + std::string(to_string(p)));
    }
}

/// Sign of d(eta)/dp for p in {x1, v, sigma}; unasserted outside the ratio hypothesis.
inline SensitivityReport sensitivity_eta(const Scenario& base, Parameter p, double relative_step = 1e-4) {
    SensitivityReport rep;
    rep.parameter = p;
    rep.quantity = "eta";
    rep.expected_sign = expected_sign(p);
    rep.condition_met = hypothesis_holds(base.agents, p);
    rep.step = detail::fd_step(parameter_value(base, p), relative_step);
    auto eta = [](const Scenario& s) { return std::vector<double>{solve(s).eta}; };
    rep.derivative = detail::central(base, p, rep.step, eta);
    rep.derivative_half = detail::central(base, p, 0.5 * rep.step, eta);
    detail::finish(rep);
    if (!rep.condition_met) rep.note = "hypothesis " + hypothesis_text(p) + " not met; sign recorded only";
    return rep;
}

/// Sign of dZ1(t)/dp for p in {x1, v, sigma} at every probe time.
inline SensitivityReport sensitivity_opinion(const Scenario& base, Parameter p,
                                             const std::vector<double>& t_probe,
                                             double relative_step = 1e-4) {
    SensitivityReport rep;
    rep.parameter = p;
    rep.quantity = "z1";
    rep.probes = t_probe;
    rep.expected_sign = expected_sign(p);
    rep.condition_met = hypothesis_holds(base.agents, p);
    rep.step = detail::fd_step(parameter_value(base, p), relative_step);
    auto z = [&](const Scenario& s) {
        const double eta = solve(s).eta;
        std::vector<double> out;
        for (double t : t_probe) out.push_back(opinion_at(s, eta, t));
        return out;
    };
    rep.derivative = detail::central(base, p, rep.step, z);
    rep.derivative_half = detail::central(base, p, 0.5 * rep.step, z);
    detail::finish(rep);
    if (!rep.condition_met) rep.note = "hypothesis " + hypothesis_text(p) + " not met; sign recorded only";
    return rep;
}

struct SweepSpec {
    Parameter parameter = Parameter::vartheta;
    std::vector<double> values;
    Scenario base;
    std::vector<double> t_probe;
    bool keep_curves = false;
};

struct SweepRow {
    double value = 0.0;
    EtaSolution solution;
    std::vector<double> z_at_probes;
    std::optional<DecisionCurve> p1_star;
    std::optional<OpinionCurve> z1;
};

struct SweepTable {
    Parameter parameter = Parameter::vartheta;
    std::vector<double> t_probe;
    std::vector<SweepRow> rows;
};

inline SweepTable run_sweep(const SweepSpec& spec) {
    if (spec.values.empty()) throw ValidationError("sweep: no values");
    for (std::size_t i = 1; i < spec.values.size(); ++i) {
        if (!(spec.values[i - 1] < spec.values[i])) {
            throw ValidationError("sweep: values must be strictly increasing");
        }
    }
    for (double t : spec.t_probe) {
        if (!(t >= 0.0 && t <= spec.base.herd.horizon())) {
            throw ValidationError("sweep: probe time " + std::to_string(t) + " outside [0, T]");
        }
    }
    SweepTable table{spec.parameter, spec.t_probe, {}};
    for (double value : spec.values) {
        const std::string where = std::string("sweep ") + to_string(spec.parameter) + "=" + std::to_string(value) + ": ";
        try {
            const Scenario s = with_parameter(spec.base, spec.parameter, value);
            SweepRow row;
            row.value = value;
            row.solution = solve(s);
            for (double t : spec.t_probe) row.z_at_probes.push_back(opinion_at(s, row.solution.eta, t));
            if (spec.keep_curves) {
                row.p1_star = optimal_decision(s.market, s.agents, s.herd, row.solution);
                row.z1 = investment_opinion(row.solution, s.herd, s.market, s.agents);
            }
            table.rows.push_back(std::move(row));
        } catch (const SolverError& e) {
            throw SolverError(where + e.what(), e.last_iterate());
        } catch (const RangeError& e) {
            throw RangeError(where + e.what());
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
    }
    return table;
}

}  // namespace herd
