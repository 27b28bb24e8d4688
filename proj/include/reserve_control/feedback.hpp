#pragma once

// Feedback risk curve a(x) = -mu V'(x) / (sigma^2 V''(x)).
//
// On its increasing piece the curve solves a' = (1/scale) (1 - c/a), whose
// solution is G(a(x)) = (x - x_left)/scale + G(a_left) with
// G(u) = u + c log(u - c).

#include "reserve_control/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rctl {

/// Breakpoint value for a risk level that is never reached.
inline constexpr double kUnreached = std::numeric_limits<double>::infinity();

class ConvergenceFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline double G_eval(double u, double c) {
    if (!(u > c)) throw std::domain_error("G_eval: argument must exceed the fixed point");
    if (c == 0.0) return u;
    return u + c * std::log(u - c);
}

/// G(a + d) - G(a) without the cancellation of subtracting two G values.
inline double G_step(double a, double d, double c) {
    if (!(a > c && a + d > c)) throw std::domain_error("G_step: arguments must exceed the fixed point");
    return d + c * std::log1p(d / (a - c));
}

inline double G_diff(double u, double a, double c) { return G_step(a, u - a, c); }

/// Inverse of G on (c, inf). Newton iteration runs on t = log(u - c), where
/// h(t) = c + e^t + c t - y is convex and increasing, so every Newton step
/// after the first lands right of the root; a bracket with bisection fallback
/// covers round-off near convergence.
inline double G_invert(double y, double c) {
    if (c == 0.0) {
        if (!(y > 0.0)) throw std::domain_error("G_invert: y must be positive when c = 0");
        return y;
    }
    auto h = [&](double t) { return c + std::exp(t) + c * t - y; };

    double t;
    if (y - c > c) {
        t = std::log(y - c);  // ignores c t
    } else {
        t = (y - c) / c;  // ignores e^t; exact as t -> -inf
        t = std::min(t, 0.0);
    }
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    const double tol = 1e-15 * std::max(1.0, std::abs(y));
    for (int iter = 0; iter < 100; ++iter) {
        const double value = h(t);
        if (std::abs(value) <= tol) return c + std::exp(t);
        if (value > 0.0)
            hi = std::min(hi, t);
        else
            lo = std::max(lo, t);
        double next = t - value / (std::exp(t) + c);
        if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= 4e-16 * std::max(1.0, std::abs(t))) return c + std::exp(next);
        t = next;
    }
    throw ConvergenceFailure("G_invert: no convergence within 100 iterations");
}

struct FeedbackCurve {
    Regime regime;
    double x_alpha = kUnreached;  // tabulated breakpoint conventions
    double x_beta = kUnreached;
    double lower_level = 0.0;  // value left of the increasing piece
    double ode_begin = 0.0;    // increasing piece is [ode_begin, ode_end)
    double ode_end = 0.0;
    double a_start = 0.0;   // a(ode_begin)
    double terminal = 0.0;  // value from ode_end on
    double c = 0.0;
    double scale = 0.0;

    bool has_ode_piece() const { return ode_end > ode_begin; }
    bool is_constant() const { return !has_ode_piece() && lower_level == terminal; }
};

/// Position of x_alpha for the low-debt branches where the curve starts below
/// alpha: the point where the constant-alpha solution's feedback level hits alpha.
inline double alpha_crossing(const ModelParams& p) {
    const RootPair r = characteristic_roots(p.alpha, p);
    const double s2a = p.alpha * p.sigma * p.sigma;
    const double ratio = r.minus * (p.mu + s2a * r.minus) / (r.plus * (p.mu + s2a * r.plus));
    return std::log(ratio) / (r.plus - r.minus);
}

inline double x_alpha_of(const ModelParams& p, const Regime& r) {
    switch (r.debt_case) {
        case DebtCase::LowDebt:
            if (r.m_subcase == DividendCase::BetaTail ||
                r.m_subcase == DividendCase::SaturatedTail)
                return alpha_crossing(p);
            return kUnreached;
        case DebtCase::MidDebt:
            return 0.0;
        case DebtCase::HighDebt:
        case DebtCase::VeryHighDebt:
            return r.m_subcase == DividendCase::AlphaImmediate ? kUnreached : 0.0;
    }
    return kUnreached;
}

namespace detail {

inline double ode_start_level(const ModelParams& p, const Regime& r) {
    return r.debt_case == DebtCase::LowDebt ? p.alpha : p.debt_ratio();
}

inline double ode_start_point(const ModelParams& p, const Regime& r) {
    return r.debt_case == DebtCase::LowDebt ? alpha_crossing(p) : 0.0;
}

// c_tilde - a(ode_begin), kept accurate when M sits next to the boundary
// where the two coincide.
inline double tilde_rise(const ModelParams& p, const Regime& r) {
    const double s2g = p.sigma * p.sigma * p.gamma;
    const double denom = p.mu * p.mu + 2.0 * s2g;
    if (r.debt_case == DebtCase::LowDebt)
        return (2.0 * p.mu * (p.delta + p.M) - p.alpha * denom) / denom;
    return 2.0 * (p.mu * p.mu * p.M - 2.0 * p.delta * s2g) / (p.mu * denom);
}

}  // namespace detail

/// First reserve level at which the optimal risk equals beta, or kUnreached.
inline double x_beta_of(const ModelParams& p, const Regime& r) {
    const DerivedConstants k = derived_constants(p);
    switch (r.m_subcase) {
        case DividendCase::BetaTail: {
            const double a0 = detail::ode_start_level(p, r);
            return detail::ode_start_point(p, r) +
                   k.scale * G_diff(p.beta, a0, k.c);
        }
        case DividendCase::SaturatedTail:
            // beta is reached only when c_tilde == beta, at the end of the piece
            if (p.M == k.M_beta) {
                const double a0 = detail::ode_start_level(p, r);
                return detail::ode_start_point(p, r) +
                       k.scale * G_diff(p.beta, a0, k.c);
            }
            return kUnreached;
        case DividendCase::BetaThreshold:
        case DividendCase::BetaImmediate:
            return 0.0;
        default:
            return kUnreached;
    }
}

inline FeedbackCurve build_feedback_curve(const ModelParams& p, const Regime& r) {
    const DerivedConstants k = derived_constants(p);
    FeedbackCurve fc;
    fc.regime = r;
    fc.c = k.c;
    fc.scale = k.scale;
    fc.x_alpha = x_alpha_of(p, r);
    fc.x_beta = x_beta_of(p, r);

    auto constant = [&](double level) {
        fc.lower_level = fc.a_start = fc.terminal = level;
        fc.ode_begin = fc.ode_end = 0.0;
    };

    switch (r.m_subcase) {
        case DividendCase::BetaTail:
        case DividendCase::SaturatedTail: {
            const double top = r.m_subcase == DividendCase::BetaTail ? p.beta : k.c_tilde;
            fc.a_start = detail::ode_start_level(p, r);
            const double rise = r.m_subcase == DividendCase::BetaTail
                                    ? p.beta - fc.a_start
                                    : detail::tilde_rise(p, r);
            fc.lower_level = r.debt_case == DebtCase::LowDebt ? p.alpha : fc.a_start;
            fc.ode_begin = detail::ode_start_point(p, r);
            fc.ode_end = fc.ode_begin + k.scale * G_step(fc.a_start, rise, k.c);
            fc.terminal = top;
            if (!(fc.ode_end > fc.ode_begin)) fc.ode_end = fc.ode_begin;
            break;
        }
        case DividendCase::AlphaThreshold:
        case DividendCase::AlphaImmediate:
            constant(p.alpha);
            break;
        case DividendCase::BetaThreshold:
        case DividendCase::BetaImmediate:
            constant(p.beta);
            break;
        case DividendCase::TildeImmediate:
            constant(k.c_tilde);
            break;
    }
    return fc;
}

inline double a_of_x(double x, const FeedbackCurve& fc) {
    if (x < fc.ode_begin) return fc.lower_level;
    if (x >= fc.ode_end) return fc.terminal;
    const double y = (x - fc.ode_begin) / fc.scale + G_eval(fc.a_start, fc.c);
    return G_invert(y, fc.c);
}

/// Slope of the curve on its increasing piece.
inline double feedback_slope(double a, const FeedbackCurve& fc) {
    return (1.0 - fc.c / a) / fc.scale;
}

}  // namespace rctl
