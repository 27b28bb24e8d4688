#pragma once

// Independent checks on an assembled value function: HJB residuals, smooth
// fit at the breakpoints, shape properties and closed-form identities.

#include "reserve_control/feedback.hpp"
#include "reserve_control/model.hpp"
#include "reserve_control/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace rctl {

struct HamiltonianMax {
    double value = 0.0;  // max over a in [alpha, beta] of the HJB expression
    double risk = 0.0;   // maximizing a
};

/// max_{a in [alpha,beta]} 1/2 sigma^2 a^2 V'' + (a mu - delta) V' - gamma V + M (1 - V')^+
inline HamiltonianMax hjb_maximize(const ModelParams& p, double V, double dV, double d2V) {
    auto h = [&](double a) {
        return 0.5 * p.sigma * p.sigma * a * a * d2V + (a * p.mu - p.delta) * dV - p.gamma * V +
               p.M * std::max(1.0 - dV, 0.0);
    };
    double a;
    if (d2V < 0.0) {
        a = std::clamp(-p.mu * dV / (p.sigma * p.sigma * d2V), p.alpha, p.beta);
    } else {
        a = h(p.alpha) >= h(p.beta) ? p.alpha : p.beta;
    }
    return {h(a), a};
}

inline double hjb_residual(const PiecewiseValue& v, const ModelParams& p, double x) {
    return hjb_maximize(p, eval_value(v, x, 0), eval_value(v, x, 1), eval_value(v, x, 2)).value;
}

/// Residual scaled by gamma V(x) + M.
inline double normalized_hjb_residual(const PiecewiseValue& v, const ModelParams& p, double x) {
    return hjb_residual(v, p, x) / (p.gamma * eval_value(v, x, 0) + p.M);
}

struct BreakpointGap {
    double x = 0.0;
    std::string name;  // "x_alpha", "x_beta" or "x1"
    double dV = 0.0;   // right limit minus left limit
    double d1V = 0.0;
    double d2V = 0.0;
};

struct ResidualReport {
    std::vector<double> grid;
    std::vector<double> residuals;  // normalized
    double max_abs_residual = 0.0;
    std::vector<BreakpointGap> breakpoint_gaps;
};

/// Right end of the default evaluation window: x1 plus 20 decay lengths.
inline double evaluation_span(const PiecewiseValue& v) {
    return v.x1 + 20.0 / std::abs(v.tail_rate());
}

/// Uniform interior grid on (0, x_max) that skips points within `exclusion`
/// of a breakpoint.
inline std::vector<double> interior_grid(const PiecewiseValue& v, double x_max, int points,
                                         double exclusion = 1e-6) {
    std::vector<double> grid;
    const auto bps = v.breakpoints();
    const double h = x_max / (points + 1);
    for (int i = 1; i <= points; ++i) {
        double x = i * h;
        const bool near = std::any_of(bps.begin(), bps.end(),
                                      [&](double b) { return std::abs(x - b) < exclusion; });
        if (near) x += 2.0 * exclusion;
        grid.push_back(x);
    }
    return grid;
}

inline std::string breakpoint_name(const PiecewiseValue& v, std::size_t segment) {
    const Segment& s = v.segments[segment];
    if (s.x_lo == v.x1) return "x1";
    if (std::holds_alternative<PowerForm>(s.form)) return "x_alpha";
    return "x_beta";
}

inline ResidualReport smooth_fit_report(const PiecewiseValue& v, int grid_points = 1000) {
    ResidualReport report;
    for (std::size_t i = 1; i < v.segments.size(); ++i) {
        const Segment& left = v.segments[i - 1];
        const Segment& right = v.segments[i];
        const double x = right.x_lo;
        report.breakpoint_gaps.push_back(BreakpointGap{x, breakpoint_name(v, i),
                                                       right.eval(x, 0) - left.eval(x, 0),
                                                       right.eval(x, 1) - left.eval(x, 1),
                                                       right.eval(x, 2) - left.eval(x, 2)});
    }
    report.grid = interior_grid(v, evaluation_span(v), grid_points);
    for (double x : report.grid) {
        const double r = normalized_hjb_residual(v, v.params, x);
        report.residuals.push_back(r);
        report.max_abs_residual = std::max(report.max_abs_residual, std::abs(r));
    }
    return report;
}

struct ShapeReport {
    bool zero_at_origin = false;
    bool increasing = true;   // V' > 0
    bool concave = true;      // V'' < 0
    bool bounded = true;      // 0 <= V <= M/gamma, V nondecreasing on the grid
    bool threshold_split = true;  // V' > 1 below x1, V' <= 1 from x1 on
    double worst_x = 0.0;     // first grid point violating a property

    bool ok() const { return zero_at_origin && increasing && concave && bounded && threshold_split; }
};

inline ShapeReport shape_check(const PiecewiseValue& v, const std::vector<double>& grid) {
    ShapeReport s;
    const double ceiling = v.params.dividend_ceiling();
    s.zero_at_origin = eval_value(v, 0.0, 0) == 0.0;
    double prev = 0.0;
    bool found = false;
    auto flag = [&](bool& field, double x) {
        field = false;
        if (!found) s.worst_x = x, found = true;
    };
    for (double x : grid) {
        const double V = eval_value(v, x, 0);
        const double d1 = eval_value(v, x, 1);
        const double d2 = eval_value(v, x, 2);
        if (!(d1 > 0.0)) flag(s.increasing, x);
        if (!(d2 < 0.0)) flag(s.concave, x);
        if (!(V >= prev && V >= 0.0 && V <= ceiling)) flag(s.bounded, x);
        // 1e-12 slack at x1 itself, where V' = 1 up to rounding
        const bool split = x < v.x1 ? d1 > 1.0 : d1 <= 1.0 + 1e-12;
        if (!split) flag(s.threshold_split, x);
        prev = V;
    }
    return s;
}

struct IdentityCheck {
    std::string name;
    double lhs = 0.0;
    double rhs = 0.0;
    bool passed = false;
};

namespace detail {

inline double quadratic_residual(double z, double b, double r, const ModelParams& p) {
    const double a2 = 0.5 * p.sigma * p.sigma * z * z * r * r;
    const double lin = b * r;
    return std::abs(a2 + lin - p.gamma) / std::max({std::abs(a2), std::abs(lin), p.gamma});
}

inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace detail

/// Threshold orderings that hold for the debt case. For mid debt only
/// M_alpha <= M0(2delta/mu) < M_beta and M0(2delta/mu) <= M0(alpha) hold;
/// M0 has its minimum at 2 delta/mu.
inline std::vector<IdentityCheck> threshold_orderings(const ModelParams& p) {
    const DerivedConstants k = derived_constants(p);
    std::vector<IdentityCheck> out;
    auto le = [&](std::string name, double a, double b, bool strict) {
        out.push_back({std::move(name), a, b, strict ? a < b : a <= b});
    };
    switch (classify_debt(p)) {
        case DebtCase::LowDebt:
            if (k.M0_mid) le("M0(2d/mu) < M0(alpha)", *k.M0_mid, *k.M0_alpha, true);
            le("M0(alpha) < M_alpha", *k.M0_alpha, k.M_alpha, true);
            le("M_alpha < M_beta", k.M_alpha, k.M_beta, true);
            break;
        case DebtCase::MidDebt:
            le("M_alpha <= M0(2d/mu)", k.M_alpha, *k.M0_mid, false);
            le("M0(2d/mu) < M_beta", *k.M0_mid, k.M_beta, true);
            if (k.M0_alpha) {
                le("M_alpha <= M0(alpha)", k.M_alpha, *k.M0_alpha, false);
                le("M0(2d/mu) <= M0(alpha)", *k.M0_mid, *k.M0_alpha, false);
            }
            break;
        case DebtCase::HighDebt:
            le("M_alpha < M_beta", k.M_alpha, k.M_beta, true);
            le("M_beta <= M0(2d/mu)", k.M_beta, *k.M0_mid, false);
            le("M0(2d/mu) <= M0(beta)", *k.M0_mid, *k.M0_beta, false);
            if (k.M0_alpha) le("M0(beta) < M0(alpha)", *k.M0_beta, *k.M0_alpha, true);
            break;
        case DebtCase::VeryHighDebt:
            le("M_alpha < M_beta", k.M_alpha, k.M_beta, true);
            break;
    }
    return out;
}

/// Root identities: quadratic residuals of both root families at alpha, beta
/// and c_tilde, and rt_minus(c_tilde) = -mu/(sigma^2 c_tilde).
inline std::vector<IdentityCheck> root_identities(const ModelParams& p, double tol = 1e-12) {
    const DerivedConstants k = derived_constants(p);
    std::vector<IdentityCheck> out;
    for (double z : {p.alpha, p.beta, k.c_tilde}) {
        const RootPair r = characteristic_roots(z, p);
        const RootPair rt = post_dividend_roots(z, p);
        for (double root : {r.plus, r.minus}) {
            const double res = detail::quadratic_residual(z, z * p.mu - p.delta, root, p);
            out.push_back({"characteristic residual", res, 0.0, res <= tol});
        }
        for (double root : {rt.plus, rt.minus}) {
            const double res = detail::quadratic_residual(z, z * p.mu - p.delta - p.M, root, p);
            out.push_back({"post-dividend residual", res, 0.0, res <= tol});
        }
    }
    const double lhs = post_dividend_roots(k.c_tilde, p).minus;
    const double rhs = -p.mu / (p.sigma * p.sigma * k.c_tilde);
    out.push_back({"rt_minus(c_tilde) = -mu/(sigma^2 c_tilde)", lhs, rhs,
                   std::abs(lhs - rhs) <= tol * std::abs(rhs)});
    return out;
}

inline std::vector<IdentityCheck> identity_suite(const ModelParams& p, double tol = 1e-9) {
    std::vector<IdentityCheck> out = root_identities(p);
    for (auto& c : threshold_orderings(p)) out.push_back(std::move(c));

    const PiecewiseValue v = build_value(p);
    const DerivedConstants& k = v.constants;
    const Regime& r = v.regime;
    auto add = [&](std::string name, double lhs, double rhs) {
        out.push_back({std::move(name), lhs, rhs, detail::close_rel(lhs, rhs, tol)});
    };

    out.push_back({"c_tilde >= beta iff M >= M_beta", k.c_tilde - p.beta, p.M - k.M_beta,
                   (k.c_tilde >= p.beta) == (p.M >= k.M_beta) ||
                       std::abs(p.M - k.M_beta) <= 1e-12 * std::max(1.0, p.M)});

    if (r.m_subcase == DividendCase::SaturatedTail) {
        // value at x1 from the increasing piece against the tail closed form
        const Segment& piece = v.segments[v.segment_index(v.x1) - 1];
        add("V(x1) = M/gamma - sigma^2 c_tilde/mu", piece.eval(v.x1, 0),
            p.dividend_ceiling() - p.sigma * p.sigma * k.c_tilde / p.mu);
    }
    if (r.debt_case == DebtCase::LowDebt && r.m_subcase == DividendCase::BetaTail) {
        const double xa = v.curve.ode_begin;
        const double xb = v.curve.ode_end;
        const double lhs = v.segments[0].eval(xa, 1);  // constant-alpha piece
        const double rhs = v.segments[2].eval(xb, 1) *
                           std::pow((p.beta - k.c) / (p.alpha - k.c), k.Gamma);  // beta band
        add("V'(x_alpha) = V'(x_beta) ((beta-c)/(alpha-c))^Gamma", lhs, rhs);
    }
    if (r.x1_positive) {
        const double a0 = -p.mu * eval_value(v, 0.0, 1) / (p.sigma * p.sigma * eval_value(v, 0.0, 2));
        double expected = 0.0;
        switch (r.debt_case) {
            case DebtCase::LowDebt:
                expected = p.mu * p.alpha * p.alpha / (2.0 * (p.mu * p.alpha - p.delta));
                break;
            case DebtCase::MidDebt: expected = p.debt_ratio(); break;
            default: expected = p.mu * p.beta * p.beta / (2.0 * (p.mu * p.beta - p.delta)); break;
        }
        add("a(0) from V'(0), V''(0)", a0, expected);
        if (r.debt_case == DebtCase::LowDebt)
            out.push_back({"a(0) < alpha", a0, p.alpha, a0 < p.alpha});
        add("V'(x1) = 1", eval_value(v, v.x1, 1), 1.0);
    }
    if (r.debt_case == DebtCase::VeryHighDebt) {
        const double d2 = eval_value(v, 0.0, 2);
        out.push_back({"V''(0) < 0", d2, 0.0, d2 < 0.0});
    }
    return out;
}

inline bool all_passed(const std::vector<IdentityCheck>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

/// Pointwise agreement of the HJB maximizers with the closed-form controls:
/// the clamped a equals a*(x), and the dividend term is active exactly when
/// x >= x1.
struct ControlConsistency {
    double max_risk_gap = 0.0;
    double worst_risk_x = 0.0;
    bool dividend_ok = true;
    double first_dividend_mismatch = 0.0;
};

inline ControlConsistency control_consistency(const PiecewiseValue& v,
                                              const std::vector<double>& grid) {
    ControlConsistency out;
    for (double x : grid) {
        const double d1 = eval_value(v, x, 1);
        const HamiltonianMax hm = hjb_maximize(v.params, eval_value(v, x, 0), d1, eval_value(v, x, 2));
        const double gap = std::abs(hm.risk - optimal_risk(v, x));
        if (gap > out.max_risk_gap) out.max_risk_gap = gap, out.worst_risk_x = x;
        if ((d1 <= 1.0) != (x >= v.x1) && out.dividend_ok) {
            out.dividend_ok = false;
            out.first_dividend_mismatch = x;
        }
    }
    return out;
}

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;  // measured quantity
    double limit = 0.0;  // tolerance it was held to
};

struct VerificationTolerances {
    double residual = 1e-7;  // normalized HJB residual
    double gap = 1e-9;       // breakpoint gaps, times M/gamma
    double slope_at_x1 = 1e-9;
    double risk = 1e-8;
};

struct VerificationRun {
    ResidualReport residuals;
    ShapeReport shape;
    ControlConsistency controls;
    std::vector<IdentityCheck> identities;
    std::vector<CheckResult> checks;

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
};

/// Runs every check on v. Identities are evaluated from v's parameters, the
/// other checks on v itself, so a tampered v fails at the affected spot.
inline VerificationRun run_verification(const PiecewiseValue& v,
                                        const VerificationTolerances& tol = {},
                                        int grid_points = 1000) {
    VerificationRun run;
    run.residuals = smooth_fit_report(v, grid_points);
    run.shape = shape_check(v, run.residuals.grid);
    run.controls = control_consistency(v, run.residuals.grid);
    run.identities = identity_suite(v.params);
    auto& checks = run.checks;

    checks.push_back({"hjb residual", run.residuals.max_abs_residual <= tol.residual,
                      run.residuals.max_abs_residual, tol.residual});
    const double gap_limit = tol.gap * v.params.dividend_ceiling();
    for (const BreakpointGap& g : run.residuals.breakpoint_gaps) {
        const double worst = std::max({std::abs(g.dV), std::abs(g.d1V), std::abs(g.d2V)});
        checks.push_back({"smooth fit at " + g.name, worst <= gap_limit, worst, gap_limit});
    }
    if (v.x1 > 0.0) {
        const double err = std::abs(eval_value(v, v.x1, 1) - 1.0);
        checks.push_back({"V'(x1) = 1", err <= tol.slope_at_x1, err, tol.slope_at_x1});
    }
    checks.push_back({"V(0) = 0", run.shape.zero_at_origin, eval_value(v, 0.0, 0), 0.0});
    checks.push_back({"V' > 0", run.shape.increasing, run.shape.worst_x, 0.0});
    checks.push_back({"V'' < 0", run.shape.concave, run.shape.worst_x, 0.0});
    checks.push_back({"0 <= V <= M/gamma", run.shape.bounded, run.shape.worst_x, 0.0});
    checks.push_back({"V' > 1 exactly below x1", run.shape.threshold_split, run.shape.worst_x, 0.0});
    checks.push_back({"maximizer equals a*(x)", run.controls.max_risk_gap <= tol.risk,
                      run.controls.max_risk_gap, tol.risk});
    checks.push_back({"dividend paid exactly from x1", run.controls.dividend_ok,
                      run.controls.first_dividend_mismatch, 0.0});
    for (const IdentityCheck& c : run.identities)
        checks.push_back({"identity: " + c.name, c.passed, c.lhs, c.rhs});
    return run;
}

}  // namespace rctl
