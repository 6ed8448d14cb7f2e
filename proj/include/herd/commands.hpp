#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "herd/errors.hpp"
#include "herd/io.hpp"
#include "herd/market.hpp"
#include "herd/merton.hpp"
#include "herd/objective.hpp"
#include "herd/opinion.hpp"
#include "herd/sensitivity.hpp"
#include "herd/simulate.hpp"
#include "herd/solver.hpp"

namespace herd {

/// Process exit statuses of the CLI.
enum ExitStatus : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitSolver = 2,
    kExitVerification = 3,
};

namespace fs = std::filesystem;

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline const char* monotonicity(const std::vector<double>& z) {
    bool inc = true, dec = true, flat = true;
    for (std::size_t i = 1; i < z.size(); ++i) {
        if (!(z[i] > z[i - 1])) inc = false;
        if (!(z[i] < z[i - 1])) dec = false;
        if (z[i] != z[i - 1]) flat = false;
    }
    return flat ? "constant" : inc ? "increasing" : dec ? "decreasing" : "mixed";
}

// ---------------------------------------------------------------------------
// solve

struct SolveOutput {
    EtaSolution solution;
    DecisionCurve p1_star;
    DecisionCurve p1_rational;
    DecisionCurve p2_rational;
    OpinionCurve z1;
    double lambda = 0.0;
    ordered_json summary;
};

inline ordered_json eta_summary(const EtaSolution& s) {
    ordered_json j;
    j["eta"] = s.eta;
    j["eta_lower"] = s.eta_lower;
    j["eta_upper"] = s.eta_upper;
    j["method"] = to_string(s.method);
    j["residual"] = s.residual;
    j["iterations"] = s.iterations;
    j["contraction_ok"] = s.contraction_ok;
    return j;
}

inline SolveOutput solve_config(const RunConfig& cfg, std::optional<double> eta_override = std::nullopt) {
    const Scenario s = cfg.scenario();
    EtaSolution sol = solve(s);
    if (eta_override) sol.eta = *eta_override;
    const auto grid = s.herd.grid();
    SolveOutput out{sol,
                    optimal_decision(s.market, s.agents, s.herd, sol, grid),
                    rational_decision(s.market, s.agents.follower.alpha, grid),
                    rational_decision(s.market, s.agents.leader.alpha, grid),
                    investment_opinion(sol, s.herd, s.market, s.agents, grid),
                    equivalence_lambda(s.market, s.agents, s.herd),
                    {}};
    out.summary = eta_summary(sol);
    out.summary["lambda"] = out.lambda;
    out.summary["z1_terminal"] = out.z1.values.back();
    out.summary["theta"] = s.herd.theta();
    out.summary["vartheta"] = s.herd.vartheta(s.agents, s.market);
    out.summary["rho"] = s.herd.rho();
    return out;
}

/// Writes decision.csv (t, p1_star, p1_rational, p2_rational, z1) and summary.json.
inline SolveOutput cmd_solve(const RunConfig& cfg) {
    auto out = solve_config(cfg);
    const fs::path dir = cfg.out_dir;
    const auto t = out.p1_star.grid.points();
    write_csv(dir / "decision.csv", {"t", "p1_star", "p1_rational", "p2_rational", "z1"},
              {&t, &out.p1_star.values, &out.p1_rational.values, &out.p2_rational.values, &out.z1.values});
    write_json(dir / "summary.json", out.summary);
    return out;
}

// ---------------------------------------------------------------------------
// estimate

inline ordered_json cmd_estimate(const std::string& csv_path, double r, double dt,
                                 std::optional<fs::path> out_file = std::nullopt) {
    const auto series = read_price_csv(csv_path, dt);
    const auto m = estimate_gbm_params(series, r);
    ordered_json j;
    j["r"] = m.r;
    j["mu"] = m.mu;
    j["sigma"] = m.sigma;
    j["v"] = m.v();
    j["n_observations"] = series.closes.size();
    if (out_file) write_json(*out_file, j);
    return j;
}

// ---------------------------------------------------------------------------
// merton (theta = 0 baseline)

inline ordered_json cmd_merton(const RunConfig& cfg) {
    require_valid(cfg.market);
    require_valid(cfg.agents);
    const auto grid = cfg.grid();
    const auto p1 = rational_decision(cfg.market, cfg.agents.follower.alpha, grid);
    const auto p2 = rational_decision(cfg.market, cfg.agents.leader.alpha, grid);
    auto describe = [&](const AgentProfile& a, const DecisionCurve& p) {
        const auto w = terminal_wealth_moments(cfg.market, a.x0, p);
        ordered_json j;
        j["alpha"] = a.alpha;
        j["x0"] = a.x0;
        j["mean_terminal_wealth"] = w.mean;
        j["var_terminal_wealth"] = w.variance;
        j["expected_utility"] = expected_cara_utility(a.alpha, w);
        j["p_at_0"] = p.values.front();
        j["p_at_T"] = p.values.back();
        return j;
    };
    ordered_json j;
    j["follower"] = describe(cfg.agents.follower, p1);
    j["leader"] = describe(cfg.agents.leader, p2);
    const fs::path dir = cfg.out_dir;
    const auto t = grid.points();
    write_csv(dir / "merton.csv", {"t", "p1_rational", "p2_rational"}, {&t, &p1.values, &p2.values});
    write_json(dir / "merton.json", j);
    return j;
}

// ---------------------------------------------------------------------------
// opinion (closed form vs backward RK4)

inline ordered_json cmd_opinion(const RunConfig& cfg) {
    const Scenario s = cfg.scenario();
    const auto sol = solve(s);
    const auto grid = s.herd.grid();
    const auto closed = investment_opinion(sol, s.herd, s.market, s.agents, grid);
    const double vt = s.herd.vartheta(s.agents, s.market);
    const auto ode = integrate_opinion_ode(sol.eta / (sol.eta + vt), s.herd, s.market, grid);
    std::vector<double> diff(grid.size());
    for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = std::abs(closed.values[i] - ode.values[i]);
    ordered_json j;
    j["eta"] = sol.eta;
    j["z1_terminal"] = closed.values.back();
    j["z1_initial"] = closed.values.front();
    j["max_abs_diff"] = max_abs_diff(closed.values, ode.values);
    j["monotonicity"] = monotonicity(closed.values);
    const fs::path dir = cfg.out_dir;
    const auto t = grid.points();
    write_csv(dir / "opinion.csv", {"t", "z1_closed", "z1_ode", "abs_diff"}, {&t, &closed.values, &ode.values, &diff});
    write_json(dir / "opinion.json", j);
    return j;
}

// ---------------------------------------------------------------------------
// simulate

enum class DecisionKind { optimal, rational, zero };

inline std::optional<DecisionKind> parse_decision_kind(const std::string& s) {
    if (s == "optimal") return DecisionKind::optimal;
    if (s == "rational") return DecisionKind::rational;
    if (s == "zero") return DecisionKind::zero;
    return std::nullopt;
}

inline ordered_json cmd_simulate(const RunConfig& cfg, const SimulationSpec& spec,
                                 DecisionKind kind = DecisionKind::optimal) {
    const auto grid = cfg.grid();
    std::optional<DecisionCurve> p;
    switch (kind) {
        case DecisionKind::optimal: {
            const Scenario s = cfg.scenario();
            p = optimal_decision(s.market, s.agents, s.herd, solve(s), grid);
            break;
        }
        case DecisionKind::rational: p = rational_decision(cfg.market, cfg.agents.follower.alpha, grid); break;
        case DecisionKind::zero: p = DecisionCurve::zero(grid); break;
    }
    const auto& a = cfg.agents.follower;
    const auto res = simulate_wealth(cfg.market, a, *p, spec);
    const auto w = terminal_wealth_moments(cfg.market, a.x0, *p);
    const double eu = expected_cara_utility(a.alpha, w);
    ordered_json j;
    j["decision"] = kind == DecisionKind::optimal ? "optimal" : kind == DecisionKind::rational ? "rational" : "zero";
    j["n_paths"] = spec.n_paths;
    j["n_steps"] = spec.n_steps;
    j["seed"] = spec.seed;
    j["mc_mean_terminal_wealth"] = res.mean_terminal_wealth;
    j["mc_var_terminal_wealth"] = res.var_terminal_wealth;
    j["closed_mean_terminal_wealth"] = w.mean;
    j["closed_var_terminal_wealth"] = w.variance;
    j["mc_expected_utility"] = res.mean_utility;
    j["mc_std_error"] = res.std_error_utility;
    j["closed_expected_utility"] = eu;
    j["z_score"] = res.std_error_utility > 0.0 ? (res.mean_utility - eu) / res.std_error_utility : 0.0;
    write_json(fs::path(cfg.out_dir) / "simulate.json", j);
    return j;
}

// ---------------------------------------------------------------------------
// verify

struct CheckResult {
    std::string name;
    bool pass = false;
    double measured = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;
    bool pass = false;
    ordered_json to_json() const {
        ordered_json j;
        j["pass"] = pass;
        j["checks"] = ordered_json::array();
        for (const auto& c : checks) {
            j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"measured", c.measured},
                                   {"tolerance", c.tolerance}, {"detail", c.detail}});
        }
        return j;
    }
};

struct VerifyOptions {
    std::size_t mc_paths = 100000;
    std::size_t mc_steps = 500;
    std::uint64_t seed = 1;
    std::size_t coarse_n = 50;
    std::size_t directions = 100;
    /// Test hook: replaces the solved eta before the decision is built.
    std::optional<double> eta_override;
};

/// Runs every numerical cross-check of the closed-form solution. A check that
/// throws is recorded as failed; the remaining checks still run.
inline VerifyReport cmd_verify(const RunConfig& cfg, const VerifyOptions& opt = {}) {
    const Scenario s = cfg.scenario();
    VerifyReport rep;
    auto run = [&](const std::string& name, double tolerance, const std::function<CheckResult()>& body) {
        CheckResult c;
        try {
            c = body();
        } catch (const std::exception& e) {
            c.pass = false;
            c.detail = std::string("error: ") + e.what();
        }
        c.name = name;
        c.tolerance = tolerance;
        rep.checks.push_back(c);
    };

    std::optional<SolveOutput> solved;
    try {
        solved = solve_config(cfg, opt.eta_override);
    } catch (const std::exception& e) {
        rep.checks.push_back({"solve", false, 0.0, 0.0, std::string("error: ") + e.what()});
    }

    run("eta_fixed_point", s.herd.tol(), [&] {
        const auto fp = solve_eta(s.market, s.agents, s.herd, SolveMethod::fixed_point);
        const auto bi = solve_eta(s.market, s.agents, s.herd, SolveMethod::bisection);
        const double agree = std::abs(fp.eta - bi.eta);
        CheckResult c;
        c.measured = std::max(fp.residual, bi.residual);
        c.pass = c.measured <= s.herd.tol() && agree <= 10.0 * s.herd.tol() && fp.eta >= fp.eta_lower &&
                 fp.eta <= fp.eta_upper;
        c.detail = "fixed-point vs bisection |diff| = " + format_double(agree);
        return c;
    });

    if (solved) {
        const auto& so = *solved;
        run("first_variation", 1e-6, [&] {
            const auto fv = first_variation_test(so.p1_star, s.market, s.agents, s.herd, opt.directions);
            CheckResult c;
            c.measured = fv.max_abs_derivative;
            c.pass = fv.max_abs_derivative <= 1e-6 && fv.concave;
            c.detail = std::string("second differences ") + (fv.concave ? "all negative" : "not all negative");
            return c;
        });
        run("brute_force_oracle", 1e-3, [&] {
            const auto bf = brute_force_optimize(s.market, s.agents, s.herd, opt.coarse_n);
            CheckResult c;
            c.measured = max_abs_diff(bf.curve.values, so.p1_star.values);
            c.pass = bf.converged && c.measured <= 1e-3;
            c.detail = "iterations " + std::to_string(bf.iterations) + (bf.converged ? "" : ", not converged");
            return c;
        });
        run("monte_carlo_utility", 3.0, [&] {
            SimulationSpec spec;
            spec.n_paths = opt.mc_paths;
            spec.n_steps = opt.mc_steps;
            spec.seed = opt.seed;
            spec.keep_samples = false;
            const auto res = simulate_wealth(s.market, s.agents.follower, so.p1_star, spec);
            const double eu = expected_cara_utility(s.market, s.agents.follower.alpha, s.agents.follower.x0, so.p1_star);
            CheckResult c;
            c.measured = std::abs(res.mean_utility - eu) / res.std_error_utility;
            c.pass = c.measured <= 3.0;
            c.detail = "mc " + format_double(res.mean_utility) + " +- " + format_double(res.std_error_utility) +
                       " vs closed form " + format_double(eu);
            return c;
        });
        run("opinion_ode", 1e-8, [&] {
            const double vt = s.herd.vartheta(s.agents, s.market);
            const auto ode = integrate_opinion_ode(so.solution.eta / (so.solution.eta + vt), s.herd, s.market,
                                                   so.z1.grid);
            const auto& g = so.z1.grid;
            double resid = 0.0;
            for (std::size_t i = 1; i + 1 < g.size(); ++i) {
                const double dz = (so.z1.values[i + 1] - so.z1.values[i - 1]) / (2.0 * g.step());
                resid = std::max(resid, std::abs(dz - opinion_ode_rhs(so.z1.values[i], s.herd, s.market)));
            }
            CheckResult c;
            c.measured = max_abs_diff(ode.values, so.z1.values);
            c.pass = c.measured <= 1e-8 && resid <= 1e-6;
            c.detail = "closed-form ODE residual " + format_double(resid);
            return c;
        });
        run("decomposition", 1e-10, [&] {
            const auto z = decompose(so.p1_star, so.p1_rational, so.p2_rational);
            const auto back = recompose(z, so.p1_rational, so.p2_rational);
            CheckResult c;
            c.measured = max_abs_diff(z.values, so.z1.values);
            const double round_trip = max_abs_diff(back.values, so.p1_star.values);
            c.pass = c.measured <= 1e-10 && round_trip <= 1e-12 && so.z1.in_open_range;
            c.detail = "recompose round trip " + format_double(round_trip);
            return c;
        });
        run("equivalence_lambda", 1e-8, [&] {
            const double d = average_deviation(so.p1_star, so.p2_rational, s.herd.rho(), s.market.r);
            const double ratio = s.herd.theta() * d / opinion_penalty(so.z1, s.herd, s.market);
            CheckResult c;
            c.measured = so.lambda == 0.0 ? std::abs(ratio) : std::abs(ratio / so.lambda - 1.0);
            c.pass = c.measured <= 1e-8;
            c.detail = "lambda " + format_double(so.lambda);
            return c;
        });
    }

    rep.pass = !rep.checks.empty();
    for (const auto& c : rep.checks) rep.pass = rep.pass && c.pass;
    return rep;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepDocument {
    SweepSpec spec;
    RunConfig base;
};

inline SweepDocument parse_sweep(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("<document>: ") + e.what()});
    }
    detail::ConfigReader rd;
    if (!doc.is_object()) throw ConfigError({"<root>: expected a JSON object"});
    rd.allow_only(doc, "", {"base", "parameter", "values", "t_probe", "curves"});
    if (!doc.contains("base")) rd.errors.push_back("base: missing");
    std::optional<Parameter> p;
    if (!doc.contains("parameter") || !doc.at("parameter").is_string()) {
        rd.errors.push_back("parameter: expected one of theta, vartheta, x1, v, sigma, rho");
    } else if (!(p = parse_parameter(doc.at("parameter").get<std::string>()))) {
        rd.errors.push_back("parameter: unknown '" + doc.at("parameter").get<std::string>() + "'");
    }
    auto numbers = [&](const char* key, bool required) {
        std::vector<double> out;
        if (!doc.contains(key)) {
            if (required) rd.errors.push_back(std::string(key) + ": missing");
            return out;
        }
        const auto& a = doc.at(key);
        if (!a.is_array()) {
            rd.errors.push_back(std::string(key) + ": expected an array of numbers");
            return out;
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_number()) rd.errors.push_back(std::string(key) + "[" + std::to_string(i) + "]: expected a number");
            else out.push_back(a[i].get<double>());
        }
        return out;
    };
    std::vector<double> values = numbers("values", true);
    std::vector<double> t_probe = numbers("t_probe", false);
    bool curves = false;
    if (doc.contains("curves")) {
        if (!doc.at("curves").is_boolean()) rd.errors.push_back("curves: expected a boolean");
        else curves = doc.at("curves").get<bool>();
    }
    if (!rd.errors.empty()) throw ConfigError(rd.errors);
    std::optional<RunConfig> base;
    try {
        base = config_from_json(doc.at("base"));
    } catch (const ConfigError& e) {
        std::vector<std::string> d;
        for (const auto& s : e.diagnostics()) d.push_back("base." + s);
        throw ConfigError(d);
    }
    SweepDocument out{SweepSpec{*p, std::move(values), base->scenario(), std::move(t_probe), curves}, *base};
    return out;
}

/// Writes sweep_<parameter>.csv (parameter_value, eta, z1_t=<probe>...) and,
/// with curves enabled, sweep_<parameter>_<row>.csv per swept value.
inline SweepTable cmd_sweep(const SweepDocument& doc) {
    auto table = run_sweep(doc.spec);
    const fs::path dir = doc.base.out_dir;
    const std::string name = std::string("sweep_") + to_string(table.parameter);
    std::vector<std::string> header{"parameter_value", "eta"};
    std::vector<std::vector<double>> cols(2 + table.t_probe.size());
    for (double t : table.t_probe) header.push_back("z1_t=" + format_double(t));
    for (const auto& row : table.rows) {
        cols[0].push_back(row.value);
        cols[1].push_back(row.solution.eta);
        for (std::size_t k = 0; k < row.z_at_probes.size(); ++k) cols[2 + k].push_back(row.z_at_probes[k]);
    }
    std::vector<const std::vector<double>*> ptrs;
    for (const auto& c : cols) ptrs.push_back(&c);
    write_csv(dir / (name + ".csv"), header, ptrs);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (!row.p1_star) continue;
        const auto t = row.p1_star->grid.points();
        write_csv(dir / (name + "_" + std::to_string(i) + ".csv"), {"t", "p1_star", "z1"},
                  {&t, &row.p1_star->values, &row.z1->values});
    }
    return table;
}

}  // namespace herd
