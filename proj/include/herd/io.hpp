#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "herd/errors.hpp"
#include "herd/market.hpp"
#include "herd/merton.hpp"
#include "herd/sensitivity.hpp"
#include "herd/solver.hpp"

namespace herd {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

/// Validation failure carrying one diagnostic per offending key path.
class ConfigError : public ValidationError {
public:
    explicit ConfigError(std::vector<std::string> diagnostics)
        : ValidationError(join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    static std::string join(const std::vector<std::string>& d) {
        std::string out = "invalid configuration:";
        for (const auto& s : d) out += "\n  " + s;
        return out;
    }
    std::vector<std::string> diagnostics_;
};

struct RunConfig {
    MarketParams market;
    AgentPair agents;
    double horizon = 0.0;
    /// Absent only for the theta = 0 Merton baseline.
    std::optional<HerdConfig> herd;
    std::size_t grid_n = HerdConfig::kDefaultGridN;
    double tol = HerdConfig::kDefaultTol;
    std::string out_dir = "out";
    std::string format = "csv";

    Scenario scenario() const {
        if (!herd) throw ValidationError("configuration has no herd section (theta > 0 required)");
        return {market, agents, *herd};
    }
    TimeGrid grid() const { return TimeGrid(horizon, grid_n); }
};

enum class ConfigMode {
    herd,     ///< herd section required with theta > 0
    baseline, ///< herd section optional; theta = 0 allowed
};

namespace detail {

class ConfigReader {
public:
    std::vector<std::string> errors;

    void allow_only(const json& obj, const std::string& path, const std::set<std::string>& keys) {
        for (const auto& [k, _] : obj.items()) {
            if (!keys.count(k)) errors.push_back(qualify(path, k) + ": unknown key");
        }
    }

    const json* object(const json& parent, const std::string& path, const std::string& key, bool required) {
        if (!parent.contains(key)) {
            if (required) errors.push_back(qualify(path, key) + ": missing");
            return nullptr;
        }
        const json& v = parent.at(key);
        if (!v.is_object()) {
            errors.push_back(qualify(path, key) + ": expected an object");
            return nullptr;
        }
        return &v;
    }

    std::optional<double> number(const json& parent, const std::string& path, const std::string& key,
                                 bool required) {
        if (!parent.contains(key)) {
            if (required) errors.push_back(qualify(path, key) + ": missing");
            return std::nullopt;
        }
        const json& v = parent.at(key);
        if (!v.is_number()) {
            errors.push_back(qualify(path, key) + ": expected a number");
            return std::nullopt;
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) {
            errors.push_back(qualify(path, key) + ": must be finite");
            return std::nullopt;
        }
        return x;
    }

    std::optional<std::string> string(const json& parent, const std::string& path, const std::string& key) {
        if (!parent.contains(key)) return std::nullopt;
        const json& v = parent.at(key);
        if (!v.is_string()) {
            errors.push_back(qualify(path, key) + ": expected a string");
            return std::nullopt;
        }
        return v.get<std::string>();
    }

    static std::string qualify(const std::string& path, const std::string& key) {
        return path.empty() ? key : path + "." + key;
    }
};

}  // namespace detail

/// Builds a validated RunConfig from a parsed JSON document. Unknown keys are errors.
inline RunConfig config_from_json(const json& doc, ConfigMode mode = ConfigMode::herd) {
    detail::ConfigReader rd;
    if (!doc.is_object()) throw ConfigError({"<root>: expected a JSON object"});
    rd.allow_only(doc, "", {"market", "follower", "leader", "T", "herd", "grid_n", "output"});

    RunConfig cfg;
    if (const json* m = rd.object(doc, "", "market", true)) {
        rd.allow_only(*m, "market", {"r", "mu", "sigma"});
        auto r = rd.number(*m, "market", "r", true);
        auto mu = rd.number(*m, "market", "mu", true);
        auto sigma = rd.number(*m, "market", "sigma", true);
        if (r && mu && sigma) {
            cfg.market = {*r, *mu, *sigma};
            if (!(*sigma > 0.0)) rd.errors.push_back("market.sigma: must be > 0");
            if (!(cfg.market.v() > 0.0)) rd.errors.push_back("market.mu: excess return mu - r must be > 0");
        }
    }
    auto read_agent = [&](const char* key, AgentProfile& out) {
        if (const json* a = rd.object(doc, "", key, true)) {
            rd.allow_only(*a, key, {"alpha", "x0"});
            auto alpha = rd.number(*a, key, "alpha", true);
            auto x0 = rd.number(*a, key, "x0", false);
            if (alpha) {
                out.alpha = *alpha;
                if (!(*alpha > 0.0)) rd.errors.push_back(std::string(key) + ".alpha: must be > 0");
            }
            out.x0 = x0.value_or(0.0);
        }
    };
    read_agent("follower", cfg.agents.follower);
    read_agent("leader", cfg.agents.leader);

    if (auto T = rd.number(doc, "", "T", true)) {
        cfg.horizon = *T;
        if (!(*T > 0.0)) rd.errors.push_back("T: must be > 0");
    }
    if (doc.contains("grid_n")) {
        const json& g = doc.at("grid_n");
        if (!g.is_number_integer() || g.get<long long>() < 10 || g.get<long long>() % 2 != 0) {
            rd.errors.push_back("grid_n: must be an even integer >= 10");
        } else {
            cfg.grid_n = g.get<std::size_t>();
        }
    }
    if (const json* o = rd.object(doc, "", "output", false)) {
        rd.allow_only(*o, "output", {"dir", "format"});
        if (auto d = rd.string(*o, "output", "dir")) cfg.out_dir = *d;
        if (auto f = rd.string(*o, "output", "format")) {
            if (*f != "csv") rd.errors.push_back("output.format: only \"csv\" is supported");
            cfg.format = *f;
        }
    }

    std::optional<double> theta, vartheta, rho;
    const json* h = rd.object(doc, "", "herd", mode == ConfigMode::herd);
    if (h) {
        rd.allow_only(*h, "herd", {"theta", "vartheta", "rho", "tol"});
        theta = rd.number(*h, "herd", "theta", false);
        vartheta = rd.number(*h, "herd", "vartheta", false);
        rho = rd.number(*h, "herd", "rho", mode == ConfigMode::herd);
        if (auto tol = rd.number(*h, "herd", "tol", false)) {
            if (!(*tol > 0.0)) rd.errors.push_back("herd.tol: must be > 0");
            cfg.tol = *tol;
        }
        if (rho && !(*rho >= 0.0)) rd.errors.push_back("herd.rho: decay rate must be >= 0");
        if (!theta && !vartheta && mode == ConfigMode::herd) {
            rd.errors.push_back("herd: one of theta or vartheta is required");
        }
    }
    if (!rd.errors.empty()) throw ConfigError(rd.errors);

    const double scale = cfg.agents.follower.alpha * cfg.market.sigma * cfg.market.sigma;
    if (theta && vartheta) {
        const double implied = *vartheta * scale;
        if (std::abs(implied - *theta) > 1e-12 * std::max(std::abs(*theta), std::abs(implied))) {
            throw ConfigError({"herd: theta and vartheta both given but inconsistent (theta = vartheta * alpha1 * sigma^2 "
                               "requires theta=" + std::to_string(implied) + ")"});
        }
    }
    const double th = theta ? *theta : (vartheta ? *vartheta * scale : 0.0);
    if (h && (theta || vartheta)) {
        if (th == 0.0 && mode == ConfigMode::baseline) {
            cfg.herd.reset();
        } else if (!(th > 0.0)) {
            throw ConfigError({std::string(theta ? "herd.theta" : "herd.vartheta") +
                               ": herd coefficient must be positive; use the merton command for theta=0"});
        } else {
            cfg.herd = HerdConfig(th, rho.value_or(0.0), cfg.horizon, cfg.tol, cfg.grid_n);
        }
    }
    return cfg;
}

inline RunConfig parse_config(const std::string& text, ConfigMode mode = ConfigMode::herd) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("<document>: ") + e.what()});
    }
    return config_from_json(doc, mode);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Applies command-line overrides and rebuilds the herd config so that grid
/// and tolerance stay consistent.
inline void apply_overrides(RunConfig& cfg, std::optional<std::size_t> grid_n, std::optional<double> tol,
                            std::optional<std::string> out_dir) {
    if (grid_n) {
        if (*grid_n < 10 || *grid_n % 2 != 0) throw ValidationError("--grid-n: must be an even integer >= 10");
        cfg.grid_n = *grid_n;
    }
    if (tol) {
        if (!(*tol > 0.0)) throw ValidationError("--tol: must be > 0");
        cfg.tol = *tol;
    }
    if (out_dir) cfg.out_dir = *out_dir;
    if (cfg.herd) cfg.herd = HerdConfig(cfg.herd->theta(), cfg.herd->rho(), cfg.horizon, cfg.tol, cfg.grid_n);
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Writes an RFC-4180 table: header row, then one row per index across all columns.
inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<const std::vector<double>*>& columns) {
    if (header.size() != columns.size()) throw ValidationError("write_csv: header/column mismatch");
    const std::size_t rows = columns.empty() ? 0 : columns.front()->size();
    for (const auto* c : columns) {
        if (c->size() != rows) throw ValidationError("write_csv: ragged columns");
    }
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << "\r\n";
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j) out << (j ? "," : "") << format_double((*columns[j])[i]);
        out << "\r\n";
    }
}

struct NumericTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    const std::vector<double>& column(const std::string& name) const {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == name) return columns[j];
        }
        throw ValidationError("csv: no column '" + name + "'");
    }
};

/// Reads a numeric CSV with a header row (as produced by write_csv).
inline NumericTable read_numeric_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    NumericTable t;
    std::string line;
    std::size_t line_no = 0;
    auto split = [](std::string_view row) {
        std::vector<std::string_view> cells;
        std::size_t start = 0;
        while (true) {
            const auto pos = row.find(',', start);
            cells.push_back(detail::trim(row.substr(start, pos - start)));
            if (pos == std::string_view::npos) break;
            start = pos + 1;
        }
        return cells;
    };
    while (std::getline(in, line)) {
        ++line_no;
        const auto row = detail::trim(line);
        if (row.empty()) continue;
        const auto cells = split(row);
        if (t.header.empty()) {
            for (auto c : cells) t.header.emplace_back(c);
            t.columns.resize(t.header.size());
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw ValidationError("csv line " + std::to_string(line_no) + ": wrong column count");
        }
        for (std::size_t j = 0; j < cells.size(); ++j) {
            double x = 0.0;
            if (!detail::parse_double(cells[j], x)) {
                throw ValidationError("csv line " + std::to_string(line_no) + ": unparsable number");
            }
            t.columns[j].push_back(x);
        }
    }
    return t;
}

inline void write_json(const std::filesystem::path& path, const ordered_json& doc) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << doc.dump(2) << "\n";
}

}  // namespace herd
