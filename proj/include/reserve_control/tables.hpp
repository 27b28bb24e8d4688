#pragma once

// Qualitative regime table: breakpoint finiteness, whether the risk bounds are
// ever used, and whether x1 is where the largest risk level is first reached.

#include "reserve_control/feedback.hpp"
#include "reserve_control/model.hpp"
#include "reserve_control/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rctl {

struct TableRow {
    ModelParams params;
    Regime regime;
    std::string m_range;
    double x_alpha = kUnreached;
    double x_beta = kUnreached;
    double x1 = 0.0;
    bool alpha_attained = false;
    bool beta_attained = false;
    bool x1_first_max = false;
};

/// "0", "positive" or "inf".
inline std::string_view position_class(double x) {
    if (x == 0.0) return "0";
    if (x == kUnreached) return "inf";
    return "positive";
}

inline TableRow table_row(const ModelParams& p) {
    const PiecewiseValue v = build_value(p);
    const DerivedConstants& k = v.constants;
    TableRow row;
    row.params = p;
    row.regime = v.regime;
    row.m_range = std::string(m_range_label(v.regime));
    row.x_alpha = v.curve.x_alpha;
    row.x_beta = v.curve.x_beta;
    row.x1 = v.x1;

    const DividendCase m = v.regime.m_subcase;
    switch (m) {
        case DividendCase::AlphaThreshold:
        case DividendCase::AlphaImmediate:
            row.alpha_attained = true;
            break;
        case DividendCase::BetaTail:
        case DividendCase::SaturatedTail:
            // the curve starts at alpha in low debt and at 2 delta/mu otherwise
            row.alpha_attained = v.regime.debt_case == DebtCase::LowDebt ||
                                 2.0 * p.delta == p.alpha * p.mu;
            break;
        case DividendCase::TildeImmediate:
            row.alpha_attained = p.M == k.M_alpha;  // c_tilde == alpha
            break;
        default:
            row.alpha_attained = false;
    }
    switch (m) {
        case DividendCase::BetaTail:
        case DividendCase::BetaThreshold:
        case DividendCase::BetaImmediate:
            row.beta_attained = true;
            break;
        case DividendCase::SaturatedTail:
            row.beta_attained = p.M == k.M_beta;  // c_tilde == beta
            break;
        default:
            row.beta_attained = false;
    }
    // The optimal risk is nondecreasing, so its maximum is first reached where
    // the increasing piece ends, or at 0 for a constant rule.
    const double first_max = v.curve.has_ode_piece() ? v.curve.ode_end : 0.0;
    row.x1_first_max = first_max == v.x1;
    return row;
}

/// Sweepable scalar fields of ModelParams.
inline double& param_field(ModelParams& p, std::string_view name) {
    if (name == "mu") return p.mu;
    if (name == "sigma") return p.sigma;
    if (name == "delta") return p.delta;
    if (name == "gamma") return p.gamma;
    if (name == "alpha") return p.alpha;
    if (name == "beta") return p.beta;
    if (name == "M") return p.M;
    throw std::invalid_argument("unknown parameter '" + std::string(name) + "'");
}

/// The M values at which the regime can change for the other parameters of p.
inline std::vector<double> m_boundaries(const ModelParams& p) {
    const DerivedConstants k = derived_constants(p);
    std::vector<double> out;
    for (double b : {k.M_alpha, k.M_beta}) out.push_back(b);
    for (const auto& b : {k.M0_alpha, k.M0_mid, k.M0_beta})
        if (b) out.push_back(*b);
    std::erase_if(out, [](double b) { return !(b > 0.0); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Evenly spaced values of one parameter; with `boundaries` and param "M" the
/// regime thresholds inside [from, to] are merged in.
inline std::vector<double> sweep_values(const ModelParams& base, std::string_view param,
                                        double from, double to, int steps,
                                        bool boundaries = false) {
    if (steps < 1) throw std::invalid_argument("sweep: steps must be at least 1");
    std::vector<double> out;
    for (int i = 0; i <= steps; ++i)
        out.push_back(i == steps ? to : from + (to - from) * i / steps);
    if (steps == 1 && from == to) out.resize(1);
    if (boundaries && param == "M") {
        for (double b : m_boundaries(base))
            if (b >= std::min(from, to) && b <= std::max(from, to)) out.push_back(b);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        if (from > to) std::reverse(out.begin(), out.end());
    }
    return out;
}

inline std::vector<TableRow> sweep(const ModelParams& base, std::string_view param,
                                   const std::vector<double>& values) {
    std::vector<TableRow> rows;
    for (double value : values) {
        ModelParams p = base;
        param_field(p, param) = value;
        rows.push_back(table_row(validate_params(p)));
    }
    return rows;
}

}  // namespace rctl
