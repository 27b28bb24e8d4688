// rctl: solve, verify, simulate, grid-check and tabulate the bounded-dividend
// reserve control problem.
//
// Exit codes: 0 success or all checks passed, 1 a check failed, 2 usage or
// configuration error.

#include "reserve_control/report.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

using namespace rctl;

namespace {

constexpr int kCheckFailed = 1;
constexpr int kUsageError = 2;

struct Options {
    std::string config_path;
    std::string out_path;
    std::string format = "json";
    std::optional<std::uint64_t> seed;
    std::optional<double> mu, sigma, delta, gamma, alpha, beta, M;

    int samples = 200;
    std::string perturb;
    std::string policy = "optimal";
    std::optional<std::int64_t> n_paths;
    std::optional<double> dt;
    std::optional<double> L;
    std::optional<int> n;
    std::string scheme;
    std::string param;
    std::optional<double> from, to;
    std::optional<int> steps;
    bool boundaries = false;
};

Json load_config(const Options& o) {
    if (o.config_path.empty()) return Json::object();
    std::ifstream in(o.config_path);
    if (!in) throw ConfigError("cannot read config file '" + o.config_path + "'");
    try {
        Json j = Json::parse(in);
        if (!j.is_object()) throw ConfigError("config must be a JSON object");
        return j;
    } catch (const Json::parse_error& e) {
        throw ConfigError("config parse error: " + std::string(e.what()));
    }
}

// Flags override the file; the result is echoed into the report.
Json effective_config(const Options& o) {
    Json cfg = load_config(o);
    const std::pair<const char*, const std::optional<double>*> params[] = {
        {"mu", &o.mu},       {"sigma", &o.sigma}, {"delta", &o.delta}, {"gamma", &o.gamma},
        {"alpha", &o.alpha}, {"beta", &o.beta},   {"M", &o.M}};
    for (const auto& [name, value] : params)
        if (*value) cfg[name] = **value;
    if (o.seed) cfg["simulate"]["seed"] = *o.seed;
    if (o.n_paths) cfg["simulate"]["n_paths"] = *o.n_paths;
    if (o.dt) cfg["simulate"]["dt"] = *o.dt;
    if (o.L) cfg["oracle"]["L"] = *o.L;
    if (o.n) cfg["oracle"]["n"] = *o.n;
    if (!o.scheme.empty()) cfg["oracle"]["scheme"] = o.scheme;
    if (!o.param.empty()) cfg["sweep"]["param"] = o.param;
    if (o.from) cfg["sweep"]["from"] = *o.from;
    if (o.to) cfg["sweep"]["to"] = *o.to;
    if (o.steps) cfg["sweep"]["steps"] = *o.steps;
    if (o.boundaries) cfg["sweep"]["boundaries"] = true;
    return cfg;
}

// The model parameters come from the top level or, for a solve report, from
// its embedded value description.
ModelParams config_params(const Json& cfg) {
    if (cfg.contains("mu")) return params_from_json(cfg);
    if (cfg.contains("value")) return params_from_json(cfg.at("value").at("params"));
    if (cfg.contains("config")) return params_from_json(cfg.at("config"));
    return params_from_json(cfg);
}

template <class T>
T get_or(const Json& block, const char* key, T fallback) {
    if (!block.is_object() || !block.contains(key)) return fallback;
    try {
        return block.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(std::string("field '") + key + "' has the wrong type");
    }
}

void emit(const Options& o, const std::string& text) {
    if (o.out_path.empty() || o.out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(o.out_path);
    if (!out) throw ConfigError("cannot write output file '" + o.out_path + "'");
    out << text;
    if (!out) throw ConfigError("failed writing output file '" + o.out_path + "'");
}

void emit_json(const Options& o, Json report, const Json& cfg) {
    report["config"] = cfg;
    emit(o, report.dump(2) + "\n");
}

int cmd_solve(const Options& o) {
    const Json cfg = effective_config(o);
    const PiecewiseValue v = build_value(config_params(cfg));
    if (o.format == "csv")
        emit(o, solve_csv(v, o.samples));
    else
        emit_json(o, solve_report(v, o.samples), cfg);
    return 0;
}

// "REL" or "SEGMENT:REL"; the default segment is the first one.
void apply_perturbation(PiecewiseValue& v, const std::string& text) {
    std::size_t segment = 0;
    std::string rel = text;
    if (const auto colon = text.find(':'); colon != std::string::npos) {
        segment = std::stoul(text.substr(0, colon));
        rel = text.substr(colon + 1);
    }
    perturb_segment(v, segment, std::stod(rel));
}

int cmd_verify(const Options& o) {
    const Json cfg = effective_config(o);
    PiecewiseValue v = cfg.contains("value") ? value_from_json(cfg.at("value"))
                                             : build_value(config_params(cfg));
    if (!o.perturb.empty()) {
        try {
            apply_perturbation(v, o.perturb);
        } catch (const std::logic_error& e) {
            throw ConfigError("bad --perturb value '" + o.perturb + "'");
        }
    }
    const VerificationRun run = run_verification(v);
    if (o.format == "csv")
        emit(o, verify_csv(run));
    else
        emit_json(o, verify_report(run), cfg);
    for (const CheckResult& c : run.checks)
        if (!c.passed) std::cerr << "check failed: " << c.name << "\n";
    return run.passed() ? 0 : kCheckFailed;
}

double policy_value(const std::string& token, const ModelParams& p) {
    if (token == "alpha") return p.alpha;
    if (token == "beta") return p.beta;
    if (token == "M") return p.M;
    return std::stod(token);
}

// optimal | constant:a=A,c=C | threshold:X | threshold:2x1 | reversed
Policy parse_policy(const std::string& text, const PiecewiseValue& v, const ModelParams& p) {
    try {
        if (text == "optimal") return optimal_policy(v, p);
        if (text == "reversed") return reversed_risk_policy(v, p);
        if (text.rfind("threshold:", 0) == 0) {
            const std::string arg = text.substr(10);
            const double t = arg == "2x1" ? (v.x1 > 0.0 ? 2.0 * v.x1 : 1.0) : std::stod(arg);
            return shifted_threshold_policy(v, p, t);
        }
        if (text.rfind("constant:", 0) == 0) {
            double a = p.alpha, c = p.M;
            std::stringstream ss(text.substr(9));
            std::string item;
            while (std::getline(ss, item, ',')) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) throw ConfigError("expected key=value in policy");
                const std::string key = item.substr(0, eq);
                const double value = policy_value(item.substr(eq + 1), p);
                if (key == "a") a = value;
                else if (key == "c") c = value;
                else throw ConfigError("unknown policy key '" + key + "'");
            }
            if (a < p.alpha || a > p.beta) throw ConfigError("policy risk level outside [alpha, beta]");
            if (c < 0.0 || c > p.M) throw ConfigError("policy dividend rate outside [0, M]");
            Policy pol = constant_policy(a, c, p);
            pol.name = text;
            return pol;
        }
    } catch (const std::logic_error& e) {
        if (dynamic_cast<const ConfigError*>(&e)) throw;
        throw ConfigError("bad policy '" + text + "'");
    }
    throw ConfigError("unknown policy '" + text + "'");
}

int cmd_simulate(const Options& o) {
    Json cfg = effective_config(o);
    const ModelParams p = config_params(cfg);
    const PiecewiseValue v = build_value(p);
    const Json block = cfg.contains("simulate") ? cfg.at("simulate") : Json::object();

    SimConfig sc;
    sc.dt = get_or(block, "dt", 1e-3);
    sc.horizon = get_or(block, "horizon", horizon_for(p, 1e-4 * p.dividend_ceiling()));
    sc.n_paths = get_or<std::int64_t>(block, "n_paths", 10000);
    sc.seed = get_or<std::uint64_t>(block, "seed", 1);
    sc.antithetic = get_or(block, "antithetic", false);
    sc.escape_tolerance = get_or(block, "escape_tolerance", 1e-3);
    sc.threads = get_or(block, "threads", 0u);
    validate_sim_config(sc);
    std::vector<double> x0s = v.x1 > 0.0 ? std::vector<double>{0.5 * v.x1, v.x1, 2.0 * v.x1}
                                         : std::vector<double>{0.5, 1.0, 2.0};
    if (block.contains("x0")) {
        x0s.clear();
        for (const Json& x : block.at("x0")) {
            if (!x.is_number()) throw ConfigError("simulate.x0 must be a list of numbers");
            x0s.push_back(x.get<double>());
        }
    }
    const std::string text = get_or<std::string>(block, "policy", o.policy);
    const Policy pol = parse_policy(text, v, p);
    const bool calibrate = get_or(block, "calibrate", pol.is_optimal);

    // echo the defaults that were filled in
    cfg["simulate"]["dt"] = sc.dt;
    cfg["simulate"]["horizon"] = sc.horizon;
    cfg["simulate"]["n_paths"] = sc.n_paths;
    cfg["simulate"]["seed"] = sc.seed;
    cfg["simulate"]["antithetic"] = sc.antithetic;
    cfg["simulate"]["escape_tolerance"] = sc.escape_tolerance;
    cfg["simulate"]["x0"] = x0s;
    cfg["simulate"]["policy"] = text;
    cfg["simulate"]["calibrate"] = calibrate;

    std::vector<SimulationRow> rows;
    for (double x0 : x0s) {
        SimulationRow r;
        r.x0 = x0;
        r.V = eval_value(v, x0, 0);
        if (calibrate) {
            SimConfig cc = sc;
            cc.seed = sc.seed ^ 0x9e3779b97f4a7c15ULL;
            cc.n_paths = std::min<std::int64_t>(sc.n_paths, 20000);
            cc.antithetic = false;
            r.allowance = calibrate_discretization(pol, x0, p, cc).allowance(sc.dt);
        }
        const auto check = majorization_check(v, p, {pol}, {x0}, sc, r.allowance);
        r.estimate = check.front().estimate;
        r.passed = check.front().passed;
        rows.push_back(r);
    }
    if (o.format == "csv")
        emit(o, simulate_csv(rows));
    else
        emit_json(o, simulate_report(pol.name, rows), cfg);
    bool all = true;
    for (const auto& r : rows) all = all && r.passed;
    return all ? 0 : kCheckFailed;
}

DriftScheme parse_scheme(const std::string& s) {
    if (s == "auto") return DriftScheme::Auto;
    if (s == "upwind") return DriftScheme::Upwind;
    if (s == "central") return DriftScheme::Central;
    throw ConfigError("unknown scheme '" + s + "'");
}

int cmd_oracle(const Options& o) {
    Json cfg = effective_config(o);
    const ModelParams p = config_params(cfg);
    const PiecewiseValue v = build_value(p);
    const Json block = cfg.contains("oracle") ? cfg.at("oracle") : Json::object();
    const double L = get_or(block, "L", default_truncation(v));
    const int n = get_or(block, "n", 4000);
    const std::string scheme = get_or<std::string>(block, "scheme", "auto");
    cfg["oracle"]["L"] = L;
    cfg["oracle"]["n"] = n;
    cfg["oracle"]["scheme"] = scheme;
    GridSolution g;
    try {
        g = solve_grid(p, L, n, parse_scheme(scheme));
    } catch (const IllConditioned& e) {
        throw ConfigError(e.what());
    }
    if (o.format == "csv")
        emit(o, oracle_csv(g, v));
    else
        emit_json(o, oracle_report(g, v), cfg);
    return 0;
}

int cmd_sweep(const Options& o) {
    Json cfg = effective_config(o);
    const ModelParams base = config_params(cfg);
    const Json block = cfg.contains("sweep") ? cfg.at("sweep") : Json::object();
    const std::string param = get_or<std::string>(block, "param", "M");
    ModelParams probe = base;
    try {
        param_field(probe, param);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const DerivedConstants k = derived_constants(base);
    const double default_to = param == "M" ? 2.0 * std::max(k.M_beta, base.M) : param_field(probe, param);
    const double from = get_or(block, "from", param == "M" ? default_to / 100.0 : default_to);
    const double to = get_or(block, "to", default_to);
    const int steps = get_or(block, "steps", 20);
    const bool boundaries = get_or(block, "boundaries", param == "M");
    cfg["sweep"] = {{"param", param}, {"from", from}, {"to", to}, {"steps", steps},
                    {"boundaries", boundaries}};
    std::vector<double> values;
    try {
        values = sweep_values(base, param, from, to, steps, boundaries);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto rows = sweep(base, param, values);
    if (o.format == "csv")
        emit(o, sweep_csv(rows, param));
    else
        emit_json(o, sweep_report(rows, param), cfg);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bounded-dividend reserve control: closed form, checks and simulation"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config_path, "JSON config file");
    app.add_option("--out", o.out_path, "output file (default stdout)");
    app.add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--seed", o.seed, "RNG seed (overrides simulate.seed)");
    app.add_option("--mu", o.mu, "profit rate per unit risk");
    app.add_option("--sigma", o.sigma, "volatility per unit risk");
    app.add_option("--delta", o.delta, "debt rate");
    app.add_option("--gamma", o.gamma, "discount rate");
    app.add_option("--alpha", o.alpha, "minimum risk level");
    app.add_option("--beta", o.beta, "maximum risk level");
    app.add_option("--M", o.M, "maximum dividend rate");

    auto* solve = app.add_subcommand("solve", "closed-form solution report");
    solve->add_option("--samples", o.samples, "sample grid intervals")->check(CLI::PositiveNumber);
    auto* verify = app.add_subcommand("verify", "HJB residual, smooth fit, shape and identity checks");
    verify->add_option("--perturb", o.perturb, "test hook: REL or SEGMENT:REL coefficient change");
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimate of a feedback policy");
    simulate->add_option("--policy", o.policy,
                         "optimal | constant:a=A,c=C | threshold:X | threshold:2x1 | reversed");
    simulate->add_option("--n-paths", o.n_paths, "number of paths (default 10000)");
    simulate->add_option("--dt", o.dt, "Euler step (default 1e-3)");
    auto* oracle = app.add_subcommand("oracle", "finite-difference policy iteration cross-check");
    oracle->add_option("--L", o.L, "truncation point (default x1 + 30/|tail rate|)");
    oracle->add_option("--n", o.n, "grid nodes (default 4000)");
    oracle->add_option("--scheme", o.scheme, "drift differencing: auto, upwind or central")->check(CLI::IsMember({"auto", "upwind", "central"}));
    auto* sweep_cmd = app.add_subcommand("sweep", "regime table over a parameter range");
    sweep_cmd->add_option("--param", o.param, "parameter to vary (default M)");
    sweep_cmd->add_option("--from", o.from, "first value");
    sweep_cmd->add_option("--to", o.to, "last value");
    sweep_cmd->add_option("--steps", o.steps, "number of intervals (default 20)");
    sweep_cmd->add_flag("--boundaries", o.boundaries, "insert the regime thresholds in range");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kUsageError;
    }

    try {
        if (*solve) return cmd_solve(o);
        if (*verify) return cmd_verify(o);
        if (*simulate) return cmd_simulate(o);
        if (*oracle) return cmd_oracle(o);
        if (*sweep_cmd) return cmd_sweep(o);
    } catch (const ParamError& e) {
        std::cerr << "invalid parameters: " << e.what() << "\n";
        return kUsageError;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsageError;
    } catch (const Json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kUsageError;
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kCheckFailed;
    }
    return kUsageError;
}
