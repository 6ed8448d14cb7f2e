#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "herd/herd.hpp"

namespace {

struct GlobalFlags {
    std::string config;
    std::optional<std::string> out;
    std::uint64_t seed = 1;
    std::optional<std::size_t> grid_n;
    std::optional<double> tol;
};

herd::RunConfig load(const GlobalFlags& g, herd::ConfigMode mode = herd::ConfigMode::herd) {
    if (g.config.empty()) throw herd::ValidationError("--config is required for this command");
    auto cfg = herd::parse_config(herd::read_text_file(g.config), mode);
    herd::apply_overrides(cfg, g.grid_n, g.tol, g.out);
    return cfg;
}

void print(const herd::ordered_json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Herd-behaviour portfolio solver: optimal decisions, investment opinions and checks"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags g;
    app.add_option("--config", g.config, "JSON run configuration");
    app.add_option("--out", g.out, "Output directory (overrides output.dir)");
    app.add_option("--seed", g.seed, "Random seed for simulation and verification");
    app.add_option("--grid-n", g.grid_n, "Time-grid intervals (even, >= 10)");
    app.add_option("--tol", g.tol, "Fixed-point tolerance");

    auto* estimate = app.add_subcommand("estimate", "Fit GBM drift and volatility to a date,close CSV");
    std::string csv_path;
    double r = 0.0;
    double dt = 1.0 / 252.0;
    estimate->add_option("--csv", csv_path, "Price file with header date,close")->required();
    estimate->add_option("--r", r, "Risk-free rate")->required();
    estimate->add_option("--dt", dt, "Time step between observations in years")->capture_default_str();

    auto* solve = app.add_subcommand("solve", "Solve for eta, write decision.csv and summary.json");
    auto* merton = app.add_subcommand("merton", "Rational (theta = 0) decisions of both agents");
    auto* opinion = app.add_subcommand("opinion", "Compare the opinion ODE with its closed form");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo terminal wealth for a decision curve");
    herd::SimulationSpec sim;
    sim.keep_samples = false;
    std::string decision = "optimal";
    simulate->add_option("--paths", sim.n_paths, "Number of paths")->capture_default_str();
    simulate->add_option("--steps", sim.n_steps, "Euler-Maruyama steps")->capture_default_str();
    simulate->add_option("--threads", sim.threads, "Worker threads (0 = hardware concurrency)");
    simulate->add_option("--decision", decision, "optimal, rational or zero")->capture_default_str();

    auto* verify = app.add_subcommand("verify", "Run every numerical cross-check; exit 3 on any failure");
    herd::VerifyOptions vopt;
    verify->add_option("--paths", vopt.mc_paths, "Monte Carlo paths")->capture_default_str();
    verify->add_option("--steps", vopt.mc_steps, "Monte Carlo steps")->capture_default_str();
    verify->add_option("--inject-eta", vopt.eta_override, "Testing hook: replace the solved eta");

    auto* sweep = app.add_subcommand("sweep", "Sweep one parameter and tabulate eta and opinions");
    std::string sweep_path;
    sweep->add_option("--spec", sweep_path, "Sweep document")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? herd::kExitOk : herd::kExitValidation;
    }

    try {
        if (estimate->parsed()) {
            std::optional<std::filesystem::path> file;
            if (g.out) file = std::filesystem::path(*g.out) / "estimate.json";
            print(herd::cmd_estimate(csv_path, r, dt, file));
        } else if (solve->parsed()) {
            print(herd::cmd_solve(load(g)).summary);
        } else if (merton->parsed()) {
            print(herd::cmd_merton(load(g, herd::ConfigMode::baseline)));
        } else if (opinion->parsed()) {
            print(herd::cmd_opinion(load(g)));
        } else if (simulate->parsed()) {
            const auto kind = herd::parse_decision_kind(decision);
            if (!kind) throw herd::ValidationError("--decision: expected optimal, rational or zero");
            sim.seed = g.seed;
            print(herd::cmd_simulate(load(g, herd::ConfigMode::baseline), sim, *kind));
        } else if (verify->parsed()) {
            const auto cfg = load(g);
            vopt.seed = g.seed;
            const auto report = herd::cmd_verify(cfg, vopt);
            const auto j = report.to_json();
            herd::write_json(std::filesystem::path(cfg.out_dir) / "verify.json", j);
            print(j);
            return report.pass ? herd::kExitOk : herd::kExitVerification;
        } else if (sweep->parsed()) {
            auto doc = herd::parse_sweep(herd::read_text_file(sweep_path));
            if (g.grid_n || g.tol || g.out) {
                herd::apply_overrides(doc.base, g.grid_n, g.tol, g.out);
                doc.spec.base = doc.base.scenario();
            }
            const auto table = herd::cmd_sweep(doc);
            std::cout << "wrote " << table.rows.size() << " rows to " << doc.base.out_dir << '\n';
        }
    } catch (const herd::ConfigError& e) {
        for (const auto& d : e.diagnostics()) std::cerr << "config error: " << d << '\n';
        return herd::kExitValidation;
    } catch (const herd::SolverError& e) {
        std::cerr << "solver error: " << e.what() << " (last iterate " << e.last_iterate() << ")\n";
        return herd::kExitSolver;
    } catch (const herd::RangeError& e) {
        std::cerr << "range error: " << e.what() << '\n';
        return herd::kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return herd::kExitValidation;
    }
    return herd::kExitOk;
}
