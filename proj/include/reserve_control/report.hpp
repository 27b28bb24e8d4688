#pragma once

// JSON and CSV reports. Non-finite numbers are written as the strings "inf",
// "-inf" and "nan"; coefficients keep full round-trip precision and display
// grids are rounded to 6 significant digits.

#include "reserve_control/grid_oracle.hpp"
#include "reserve_control/simulation.hpp"
#include "reserve_control/tables.hpp"
#include "reserve_control/value_function.hpp"
#include "reserve_control/verification.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace rctl {

using Json = nlohmann::ordered_json;

inline Json num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

/// x rounded to 6 significant digits.
inline Json display(double x) {
    if (!std::isfinite(x)) return num(x);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return std::stod(buf);
}

inline double read_num(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "inf") return kUnreached;
        if (s == "-inf") return -kUnreached;
        if (s == "nan") return std::nan("");
    }
    throw ConfigError("expected a number or \"inf\", got " + j.dump());
}

inline Json to_json(const ModelParams& p) {
    return Json{{"mu", p.mu},       {"sigma", p.sigma}, {"delta", p.delta}, {"gamma", p.gamma},
                {"alpha", p.alpha}, {"beta", p.beta},   {"M", p.M}};
}

/// Reads and validates the seven model fields.
inline ModelParams params_from_json(const Json& j) {
    ModelParams p;
    const std::pair<const char*, double*> fields[] = {
        {"mu", &p.mu},       {"sigma", &p.sigma}, {"delta", &p.delta}, {"gamma", &p.gamma},
        {"alpha", &p.alpha}, {"beta", &p.beta},   {"M", &p.M}};
    for (const auto& [name, dst] : fields) {
        if (!j.contains(name)) throw ConfigError(std::string("missing parameter '") + name + "'");
        if (!j.at(name).is_number())
            throw ConfigError(std::string("parameter '") + name + "' must be a number");
        *dst = j.at(name).get<double>();
    }
    return validate_params(p);
}

inline Json to_json(const Regime& r) {
    return Json{{"debt_case", std::string(to_string(r.debt_case))},
                {"m_subcase", std::string(to_string(r.m_subcase))},
                {"m_range", std::string(m_range_label(r))},
                {"x1_positive", r.x1_positive}};
}

inline Json to_json(const DerivedConstants& k) {
    auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
    return Json{{"c", k.c},
                {"c_tilde", k.c_tilde},
                {"Gamma", k.Gamma},
                {"scale", k.scale},
                {"M_alpha", k.M_alpha},
                {"M_beta", k.M_beta},
                {"M0_alpha", opt(k.M0_alpha)},
                {"M0_beta", opt(k.M0_beta)},
                {"M0_mid", opt(k.M0_mid)}};
}

inline Json to_json(const FeedbackCurve& fc) {
    return Json{{"x_alpha", num(fc.x_alpha)},   {"x_beta", num(fc.x_beta)},
                {"lower_level", fc.lower_level}, {"ode_begin", fc.ode_begin},
                {"ode_end", fc.ode_end},         {"a_start", fc.a_start},
                {"terminal", fc.terminal},       {"c", fc.c},
                {"scale", fc.scale}};
}

inline Json to_json(const Segment& s) {
    Json j{{"x_lo", num(s.x_lo)}, {"x_hi", num(s.x_hi)}, {"kind", std::string(s.kind())},
           {"risk_level", s.risk_level}};
    Json coeff;
    if (const auto* f = std::get_if<ExpDiff>(&s.form)) {
        coeff = {{"k", f->k}, {"r_plus", f->r_plus}, {"r_minus", f->r_minus}};
    } else if (const auto* f = std::get_if<TwoExp>(&s.form)) {
        coeff = {{"K1", f->K1}, {"K2", f->K2}, {"r_plus", f->r_plus},
                 {"r_minus", f->r_minus}, {"anchor", f->anchor}};
    } else if (const auto* f = std::get_if<PowerForm>(&s.form)) {
        coeff = {{"vp_left", f->vp_left}, {"Gamma", f->Gamma}, {"a_left", f->curve.a_start},
                 {"x_left", f->curve.ode_begin}, {"c", f->curve.c}, {"scale", f->curve.scale}};
    } else if (const auto* f = std::get_if<TailExp>(&s.form)) {
        coeff = {{"level", f->level}, {"K", f->K}, {"rate", f->rate}, {"anchor", f->anchor}};
    }
    j["coefficients"] = coeff;
    return j;
}

/// Full description of V; value_from_json inverts it exactly.
inline Json to_json(const PiecewiseValue& v) {
    Json segs = Json::array();
    for (const Segment& s : v.segments) segs.push_back(to_json(s));
    return Json{{"params", to_json(v.params)}, {"regime", to_json(v.regime)},
                {"curve", to_json(v.curve)},   {"x1", v.x1},
                {"segments", segs}};
}

namespace detail {

inline DebtCase debt_from_string(const std::string& s) {
    for (DebtCase d : {DebtCase::LowDebt, DebtCase::MidDebt, DebtCase::HighDebt,
                       DebtCase::VeryHighDebt})
        if (to_string(d) == s) return d;
    throw ConfigError("unknown debt case '" + s + "'");
}

inline DividendCase subcase_from_string(const std::string& s) {
    for (DividendCase d :
         {DividendCase::BetaTail, DividendCase::SaturatedTail, DividendCase::AlphaThreshold,
          DividendCase::BetaThreshold, DividendCase::BetaImmediate, DividendCase::TildeImmediate,
          DividendCase::AlphaImmediate})
        if (to_string(d) == s) return d;
    throw ConfigError("unknown dividend case '" + s + "'");
}

}  // namespace detail

inline PiecewiseValue value_from_json(const Json& j) {
    try {
        PiecewiseValue v;
        v.params = params_from_json(j.at("params"));
        v.constants = derived_constants(v.params);
        const Json& r = j.at("regime");
        v.regime.debt_case = detail::debt_from_string(r.at("debt_case").get<std::string>());
        v.regime.m_subcase = detail::subcase_from_string(r.at("m_subcase").get<std::string>());
        v.regime.x1_positive = r.at("x1_positive").get<bool>();
        const Json& c = j.at("curve");
        FeedbackCurve& fc = v.curve;
        fc.regime = v.regime;
        fc.x_alpha = read_num(c.at("x_alpha"));
        fc.x_beta = read_num(c.at("x_beta"));
        fc.lower_level = read_num(c.at("lower_level"));
        fc.ode_begin = read_num(c.at("ode_begin"));
        fc.ode_end = read_num(c.at("ode_end"));
        fc.a_start = read_num(c.at("a_start"));
        fc.terminal = read_num(c.at("terminal"));
        fc.c = read_num(c.at("c"));
        fc.scale = read_num(c.at("scale"));
        v.x1 = read_num(j.at("x1"));
        for (const Json& s : j.at("segments")) {
            Segment seg;
            seg.x_lo = read_num(s.at("x_lo"));
            seg.x_hi = read_num(s.at("x_hi"));
            seg.risk_level = read_num(s.at("risk_level"));
            const std::string kind = s.at("kind").get<std::string>();
            const Json& k = s.at("coefficients");
            if (kind == "ExpDiff") {
                seg.form = ExpDiff{read_num(k.at("k")), read_num(k.at("r_plus")),
                                   read_num(k.at("r_minus"))};
            } else if (kind == "TwoExp") {
                seg.form = TwoExp{read_num(k.at("K1")), read_num(k.at("K2")),
                                  read_num(k.at("r_plus")), read_num(k.at("r_minus")),
                                  read_num(k.at("anchor"))};
            } else if (kind == "PowerForm") {
                FeedbackCurve piece = fc;
                piece.a_start = read_num(k.at("a_left"));
                piece.ode_begin = read_num(k.at("x_left"));
                piece.c = read_num(k.at("c"));
                piece.scale = read_num(k.at("scale"));
                const ModelParams& p = v.params;
                seg.form = PowerForm{piece, read_num(k.at("vp_left")), p.mu, p.sigma,
                                     p.delta, p.gamma, read_num(k.at("Gamma"))};
            } else if (kind == "TailExp") {
                seg.form = TailExp{read_num(k.at("level")), read_num(k.at("K")),
                                   read_num(k.at("rate")), read_num(k.at("anchor"))};
            } else {
                throw ConfigError("unknown segment kind '" + kind + "'");
            }
            v.segments.push_back(std::move(seg));
        }
        if (v.segments.empty()) throw ConfigError("value has no segments");
        return v;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("malformed value description: ") + e.what());
    }
}

/// Scales the leading coefficient of one segment by (1 + rel). Test hook for
/// the verifier's negative control.
inline void perturb_segment(PiecewiseValue& v, std::size_t index, double rel) {
    if (index >= v.segments.size()) throw ConfigError("perturb: no such segment");
    std::visit(
        [&](auto& f) {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, ExpDiff>) f.k *= 1.0 + rel;
            if constexpr (std::is_same_v<F, TwoExp>) f.K1 *= 1.0 + rel;
            if constexpr (std::is_same_v<F, PowerForm>) f.vp_left *= 1.0 + rel;
            if constexpr (std::is_same_v<F, TailExp>) f.K *= 1.0 + rel;
        },
        v.segments[index].form);
}

struct SampleRow {
    double x, V, dV, a, c;
};

/// V, V', a*(x) and the dividend rate on n + 1 equally spaced points of [0, x_max].
inline std::vector<SampleRow> sample_grid(const PiecewiseValue& v, double x_max, int n) {
    std::vector<SampleRow> rows;
    for (int i = 0; i <= n; ++i) {
        const double x = x_max * i / n;
        rows.push_back({x, eval_value(v, x, 0), eval_value(v, x, 1), optimal_risk(v, x),
                        x >= v.x1 ? v.params.M : 0.0});
    }
    return rows;
}

inline Json solve_report(const PiecewiseValue& v, int samples = 200) {
    Json j;
    j["command"] = "solve";
    j["regime"] = to_json(v.regime);
    j["constants"] = to_json(v.constants);
    j["breakpoints"] = {{"x_alpha", num(v.curve.x_alpha)},
                        {"x_beta", num(v.curve.x_beta)},
                        {"x1", num(v.x1)}};
    j["value"] = to_json(v);
    Json grid = Json::array();
    for (const SampleRow& r : sample_grid(v, evaluation_span(v), samples))
        grid.push_back({{"x", display(r.x)}, {"V", display(r.V)}, {"dV", display(r.dV)},
                        {"a", display(r.a)}, {"c", display(r.c)}});
    j["grid"] = grid;
    return j;
}

inline std::string solve_csv(const PiecewiseValue& v, int samples = 200) {
    std::ostringstream out;
    out << "x,V,dV,a,c\n";
    char buf[160];
    for (const SampleRow& r : sample_grid(v, evaluation_span(v), samples)) {
        std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g,%.6g\n", r.x, r.V, r.dV, r.a, r.c);
        out << buf;
    }
    return out.str();
}

inline Json verify_report(const VerificationRun& run) {
    Json j;
    j["command"] = "verify";
    j["passed"] = run.passed();
    j["max_abs_residual"] = run.residuals.max_abs_residual;
    Json gaps = Json::array();
    for (const BreakpointGap& g : run.residuals.breakpoint_gaps)
        gaps.push_back({{"name", g.name}, {"x", g.x}, {"dV", g.dV}, {"d1V", g.d1V}, {"d2V", g.d2V}});
    j["breakpoint_gaps"] = gaps;
    j["shape"] = {{"zero_at_origin", run.shape.zero_at_origin},
                  {"increasing", run.shape.increasing},
                  {"concave", run.shape.concave},
                  {"bounded", run.shape.bounded},
                  {"threshold_split", run.shape.threshold_split}};
    Json ids = Json::array();
    for (const IdentityCheck& c : run.identities)
        ids.push_back({{"name", c.name}, {"lhs", num(c.lhs)}, {"rhs", num(c.rhs)}, {"passed", c.passed}});
    j["identities"] = ids;
    Json checks = Json::array();
    for (const CheckResult& c : run.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"value", num(c.value)},
                          {"limit", num(c.limit)}});
    j["checks"] = checks;
    Json failed = Json::array();
    for (const CheckResult& c : run.checks)
        if (!c.passed) failed.push_back(c.name);
    j["failed"] = failed;
    return j;
}

inline std::string verify_csv(const VerificationRun& run) {
    std::ostringstream out;
    out << "check,passed,value,limit\n";
    char buf[64];
    for (const CheckResult& c : run.checks) {
        out << '"' << c.name << "\"," << (c.passed ? "true" : "false") << ',';
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", c.value, c.limit);
        out << buf;
    }
    return out.str();
}

struct SimulationRow {
    double x0 = 0.0;
    SimEstimate estimate;
    double V = 0.0;
    double allowance = 0.0;
    bool passed = false;

    double z() const {
        return estimate.std_error > 0.0 ? (estimate.mean - V) / estimate.std_error
                                        : (estimate.mean == V ? 0.0 : std::copysign(kUnreached, estimate.mean - V));
    }
};

inline Json to_json(const SimEstimate& e) {
    return Json{{"mean", e.mean},
                {"std_error", e.std_error},
                {"ruin_fraction", e.ruin_fraction},
                {"truncation_bound", e.truncation_bound},
                {"escape_bound", e.escape_bound},
                {"n_paths", e.n_paths}};
}

inline Json simulate_report(const std::string& policy, const std::vector<SimulationRow>& rows) {
    Json j;
    j["command"] = "simulate";
    j["policy"] = policy;
    Json arr = Json::array();
    bool all = true;
    for (const SimulationRow& r : rows) {
        arr.push_back({{"x0", r.x0}, {"estimate", to_json(r.estimate)}, {"V", r.V},
                       {"z", num(r.z())}, {"allowance", r.allowance}, {"passed", r.passed}});
        all = all && r.passed;
    }
    j["results"] = arr;
    j["passed"] = all;
    return j;
}

inline std::string simulate_csv(const std::vector<SimulationRow>& rows) {
    std::ostringstream out;
    out << "x0,mean,std_error,ruin_fraction,truncation_bound,escape_bound,V,z,allowance,passed\n";
    char buf[256];
    for (const SimulationRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%s\n",
                      r.x0, r.estimate.mean, r.estimate.std_error, r.estimate.ruin_fraction,
                      r.estimate.truncation_bound, r.estimate.escape_bound, r.V, r.z(),
                      r.allowance, r.passed ? "true" : "false");
        out << buf;
    }
    return out.str();
}

inline std::string_view to_string(DriftScheme s) {
    switch (s) {
        case DriftScheme::Auto: return "auto";
        case DriftScheme::Upwind: return "upwind";
        case DriftScheme::Central: return "central";
    }
    return "?";
}

inline Json oracle_report(const GridSolution& g, const PiecewiseValue& v) {
    Json j;
    j["command"] = "oracle";
    j["L"] = g.L;
    j["n"] = g.x_grid.size();
    j["scheme"] = std::string(to_string(g.scheme));
    j["iterations"] = g.iterations;
    j["monotone"] = g.monotone;
    j["max_rel_error"] = compare_with_closed_form(g, v);
    Json nodes = Json::array();
    for (std::size_t i = 0; i < g.x_grid.size(); ++i)
        nodes.push_back({{"x", display(g.x_grid[i])}, {"V_grid", display(g.values[i])},
                         {"V", display(eval_value(v, g.x_grid[i], 0))}, {"a", display(g.risk[i])},
                         {"c", display(g.dividend[i])}});
    j["nodes"] = nodes;
    return j;
}

inline std::string oracle_csv(const GridSolution& g, const PiecewiseValue& v) {
    std::ostringstream out;
    out << "x,V_grid,V,a,c\n";
    char buf[160];
    for (std::size_t i = 0; i < g.x_grid.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.6g,%.6g,%.6g\n", g.x_grid[i], g.values[i],
                      eval_value(v, g.x_grid[i], 0), g.risk[i], g.dividend[i]);
        out << buf;
    }
    return out.str();
}

inline Json to_json(const TableRow& r, std::string_view param) {
    ModelParams p = r.params;
    return Json{{"param", std::string(param)},
                {"value", param_field(p, param)},
                {"debt_case", std::string(to_string(r.regime.debt_case))},
                {"m_subcase", std::string(to_string(r.regime.m_subcase))},
                {"m_range", r.m_range},
                {"x_alpha", num(r.x_alpha)},
                {"x_beta", num(r.x_beta)},
                {"x1", num(r.x1)},
                {"x_alpha_class", std::string(position_class(r.x_alpha))},
                {"x_beta_class", std::string(position_class(r.x_beta))},
                {"x1_class", std::string(position_class(r.x1))},
                {"alpha_attained", r.alpha_attained},
                {"beta_attained", r.beta_attained},
                {"x1_first_max", r.x1_first_max}};
}

inline Json sweep_report(const std::vector<TableRow>& rows, std::string_view param) {
    Json j;
    j["command"] = "sweep";
    Json arr = Json::array();
    for (const TableRow& r : rows) arr.push_back(to_json(r, param));
    j["rows"] = arr;
    return j;
}

/// Column order: param,value,debt_case,m_subcase,x_alpha,x_beta,x1,
/// x_alpha_class,x_beta_class,x1_class,alpha_attained,beta_attained,x1_first_max
inline std::string sweep_csv(const std::vector<TableRow>& rows, std::string_view param) {
    std::ostringstream out;
    out << "param,value,debt_case,m_subcase,x_alpha,x_beta,x1,x_alpha_class,x_beta_class,"
           "x1_class,alpha_attained,beta_attained,x1_first_max\n";
    auto yn = [](bool b) { return b ? "yes" : "no"; };
    char buf[96];
    for (const TableRow& r : rows) {
        ModelParams p = r.params;
        std::snprintf(buf, sizeof buf, "%.17g", param_field(p, param));
        out << param << ',' << buf << ',' << to_string(r.regime.debt_case) << ','
            << to_string(r.regime.m_subcase);
        for (double x : {r.x_alpha, r.x_beta, r.x1}) {
            std::snprintf(buf, sizeof buf, "%.17g", x);
            out << ',' << (std::isinf(x) ? "inf" : buf);
        }
        out << ',' << position_class(r.x_alpha) << ',' << position_class(r.x_beta) << ','
            << position_class(r.x1) << ',' << yn(r.alpha_attained) << ','
            << yn(r.beta_attained) << ',' << yn(r.x1_first_max) << '\n';
    }
    return out.str();
}

}  // namespace rctl
