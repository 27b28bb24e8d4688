#pragma once

// Piecewise closed-form optimal return function V.
//
// Every free constant is fixed by smooth fit: V' continuous at the left end
// of the increasing-risk piece, V'(x1) = 1 and V''(x1) equal to the tail's
// curvature when x1 > 0.

#include "reserve_control/feedback.hpp"
#include "reserve_control/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace rctl {

/// k (e^{r+ x} - e^{r- x}) with constant risk level z.
struct ExpDiff {
    double k = 0.0;
    double r_plus = 0.0;
    double r_minus = 0.0;

    double eval(double x, int order) const {
        const double lead = k * std::exp(r_plus * x);
        if (order == 0) return -lead * std::expm1((r_minus - r_plus) * x);
        const double tail = k * std::exp(r_minus * x);
        const double p = order == 1 ? r_plus : r_plus * r_plus;
        const double m = order == 1 ? r_minus : r_minus * r_minus;
        return p * lead - m * tail;
    }
};

/// K1 e^{r+ (x - anchor)} + K2 e^{r- (x - anchor)}.
struct TwoExp {
    double K1 = 0.0;
    double K2 = 0.0;
    double r_plus = 0.0;
    double r_minus = 0.0;
    double anchor = 0.0;

    double eval(double x, int order) const {
        const double e1 = K1 * std::exp(r_plus * (x - anchor));
        const double e2 = K2 * std::exp(r_minus * (x - anchor));
        const double p = order == 0 ? 1.0 : order == 1 ? r_plus : r_plus * r_plus;
        const double m = order == 0 ? 1.0 : order == 1 ? r_minus : r_minus * r_minus;
        return p * e1 + m * e2;
    }
};

/// Increasing-risk piece: V = (mu a - 2 delta)/(2 gamma) V',
/// V' = vp_left ((a - c)/(a_left - c))^{-Gamma}, V'' = -mu V'/(sigma^2 a).
struct PowerForm {
    FeedbackCurve curve;
    double vp_left = 0.0;  // V' at the left end of the piece
    double mu = 0.0;
    double sigma = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
    double Gamma = 0.0;

    double slope_at(double a) const {
        return vp_left * std::pow((a - curve.c) / (curve.a_start - curve.c), -Gamma);
    }

    double eval_at_level(double a, int order) const {
        const double vp = slope_at(a);
        if (order == 1) return vp;
        if (order == 2) return -mu * vp / (sigma * sigma * a);
        return mu * (a - 2.0 * delta / mu) / (2.0 * gamma) * vp;
    }

    double level(double x) const {
        if (x == curve.ode_begin) return curve.a_start;
        // The segment may be evaluated one-sidedly beyond the curve's own
        // piece; extend the G parametrization instead of clamping.
        const double y = (x - curve.ode_begin) / curve.scale + G_eval(curve.a_start, curve.c);
        return G_invert(y, curve.c);
    }

    double eval(double x, int order) const { return eval_at_level(level(x), order); }
};

/// level + K e^{rate (x - anchor)}.
struct TailExp {
    double level = 0.0;
    double K = 0.0;
    double rate = 0.0;
    double anchor = 0.0;

    double eval(double x, int order) const {
        const double e = K * std::exp(rate * (x - anchor));
        if (order == 0) return level + e;
        return order == 1 ? rate * e : rate * rate * e;
    }
};

using SegmentForm = std::variant<ExpDiff, TwoExp, PowerForm, TailExp>;

struct Segment {
    double x_lo = 0.0;
    double x_hi = kUnreached;
    SegmentForm form;
    double risk_level = 0.0;  // optimal risk on the segment; unused for PowerForm

    /// Analytic V^(order) of this segment's closed form, also outside [x_lo, x_hi).
    double eval(double x, int order) const {
        return std::visit([&](const auto& f) { return f.eval(x, order); }, form);
    }

    /// Optimal risk level at x according to this segment.
    double risk(double x) const {
        if (const auto* pf = std::get_if<PowerForm>(&form)) return pf->level(x);
        return risk_level;
    }

    std::string_view kind() const {
        switch (form.index()) {
            case 0: return "ExpDiff";
            case 1: return "TwoExp";
            case 2: return "PowerForm";
            default: return "TailExp";
        }
    }
};

struct PiecewiseValue {
    ModelParams params;
    DerivedConstants constants;
    Regime regime;
    FeedbackCurve curve;
    double x1 = 0.0;
    std::vector<Segment> segments;

    std::size_t segment_index(double x) const {
        auto it = std::upper_bound(segments.begin(), segments.end(), x,
                                   [](double v, const Segment& s) { return v < s.x_hi; });
        if (it == segments.end()) return segments.size() - 1;
        return static_cast<std::size_t>(it - segments.begin());
    }

    std::vector<double> breakpoints() const {
        std::vector<double> out;
        for (std::size_t i = 1; i < segments.size(); ++i) out.push_back(segments[i].x_lo);
        return out;
    }

    /// Exponent of the terminal exponential (negative).
    double tail_rate() const { return std::get<TailExp>(segments.back().form).rate; }
};

inline double eval_value(const PiecewiseValue& v, double x, int order) {
    if (!(x >= 0.0)) throw std::domain_error("eval_value: x must be non-negative");
    if (order < 0 || order > 2) throw std::invalid_argument("eval_value: order must be 0, 1 or 2");
    return v.segments[v.segment_index(x)].eval(x, order);
}

/// Optimal risk level a*(x) from the segment owning x.
inline double optimal_risk(const PiecewiseValue& v, double x) {
    return v.segments[v.segment_index(std::max(x, 0.0))].risk(std::max(x, 0.0));
}

/// x_beta - x1 for the beta-band branch; non-positive because c_tilde >= beta.
inline double beta_gap(const ModelParams& p) {
    const DerivedConstants k = derived_constants(p);
    if (p.M <= k.M_beta) return 0.0;  // c_tilde == beta: the band is empty
    const RootPair r = characteristic_roots(p.beta, p);
    const double rt = post_dividend_roots(p.beta, p).minus;
    const double s2b = p.beta * p.sigma * p.sigma;
    // From a(x_beta) = beta with K1, K2 fixed by V'(x1) = 1, V''(x1) = rt.
    const double ratio =
        (r.plus - rt) * -(p.mu + s2b * r.minus) / ((rt - r.minus) * (p.mu + s2b * r.plus));
    return std::min(0.0, std::log(ratio) / (r.plus - r.minus));
}

/// Threshold of a constant-risk-z solution k(e^{r+ x} - e^{r- x}) meeting the
/// post-dividend tail with V'(x1) = 1 and V''(x1) = rt_minus(z).
inline double constant_risk_threshold(double z, const ModelParams& p) {
    const RootPair r = characteristic_roots(z, p);
    const double rt = post_dividend_roots(z, p).minus;
    const double ratio = r.minus * (r.minus - rt) / (r.plus * (r.plus - rt));
    return std::max(0.0, std::log(ratio) / (r.plus - r.minus));
}

inline double threshold_x1(const ModelParams& p, const Regime& r, const FeedbackCurve& fc) {
    if (!r.x1_positive) return 0.0;
    switch (r.m_subcase) {
        case DividendCase::BetaTail: return fc.ode_end - beta_gap(p);
        case DividendCase::SaturatedTail: return fc.ode_end;
        case DividendCase::AlphaThreshold: return constant_risk_threshold(p.alpha, p);
        case DividendCase::BetaThreshold: return constant_risk_threshold(p.beta, p);
        default: return 0.0;
    }
}

namespace detail {

inline PowerForm make_power_form(const ModelParams& p, const DerivedConstants& k,
                                 const FeedbackCurve& fc, double vp_left) {
    return PowerForm{fc, vp_left, p.mu, p.sigma, p.delta, p.gamma, k.Gamma};
}

// V'(x) of k(e^{r+ x} - e^{r- x}) per unit k.
inline double exp_diff_unit_slope(const RootPair& r, double x) {
    return r.plus * std::exp(r.plus * x) - r.minus * std::exp(r.minus * x);
}

}  // namespace detail

inline PiecewiseValue build_value(const ModelParams& p) {
    PiecewiseValue v;
    v.params = p;
    v.constants = derived_constants(p);
    v.regime = classify_regime(p);
    v.curve = build_feedback_curve(p, v.regime);
    v.x1 = threshold_x1(p, v.regime, v.curve);

    const DerivedConstants& k = v.constants;
    const FeedbackCurve& fc = v.curve;
    const double ceiling = p.dividend_ceiling();
    const double x1 = v.x1;
    auto& segs = v.segments;

    auto push = [&](double lo, double hi, SegmentForm form, double risk) {
        if (hi > lo || hi == kUnreached) segs.push_back(Segment{lo, hi, std::move(form), risk});
    };

    // Terminal piece: smooth fit at x1 > 0 gives K = 1/rate, otherwise V(0) = 0.
    double tail_level_risk = 0.0;
    double tail_rate = 0.0;
    switch (v.regime.m_subcase) {
        case DividendCase::BetaTail:
        case DividendCase::BetaThreshold:
        case DividendCase::BetaImmediate:
            tail_level_risk = p.beta;
            tail_rate = post_dividend_roots(p.beta, p).minus;
            break;
        case DividendCase::SaturatedTail:
        case DividendCase::TildeImmediate:
            tail_level_risk = k.c_tilde;
            tail_rate = -p.mu / (p.sigma * p.sigma * k.c_tilde);
            break;
        case DividendCase::AlphaThreshold:
        case DividendCase::AlphaImmediate:
            tail_level_risk = p.alpha;
            tail_rate = post_dividend_roots(p.alpha, p).minus;
            break;
    }
    const double tail_K = x1 > 0.0 ? 1.0 / tail_rate : -ceiling;
    const TailExp tail{ceiling, tail_K, tail_rate, x1};

    switch (v.regime.m_subcase) {
        case DividendCase::BetaTail: {
            const RootPair rb = characteristic_roots(p.beta, p);
            const double rt = tail_rate;
            const double spread = rb.plus - rb.minus;
            const TwoExp band{(rt - rb.minus) / (rb.plus * spread),
                              (rb.plus - rt) / (rb.minus * spread), rb.plus, rb.minus, x1};
            const double x_beta = fc.ode_end;
            const double vp_beta = band.eval(x_beta, 1);
            const double vp_start =
                vp_beta * std::pow((p.beta - k.c) / (fc.a_start - k.c), k.Gamma);
            if (v.regime.debt_case == DebtCase::LowDebt) {
                const RootPair ra = characteristic_roots(p.alpha, p);
                const double coeff = vp_start / detail::exp_diff_unit_slope(ra, fc.ode_begin);
                push(0.0, fc.ode_begin, ExpDiff{coeff, ra.plus, ra.minus}, p.alpha);
            }
            push(fc.ode_begin, x_beta, detail::make_power_form(p, k, fc, vp_start), 0.0);
            push(x_beta, x1, band, p.beta);
            break;
        }
        case DividendCase::SaturatedTail: {
            const double vp_start =
                std::pow((k.c_tilde - k.c) / (fc.a_start - k.c), k.Gamma);
            if (v.regime.debt_case == DebtCase::LowDebt) {
                const RootPair ra = characteristic_roots(p.alpha, p);
                const double coeff = vp_start / detail::exp_diff_unit_slope(ra, fc.ode_begin);
                push(0.0, fc.ode_begin, ExpDiff{coeff, ra.plus, ra.minus}, p.alpha);
            }
            push(fc.ode_begin, x1, detail::make_power_form(p, k, fc, vp_start), 0.0);
            break;
        }
        case DividendCase::AlphaThreshold:
        case DividendCase::BetaThreshold: {
            const RootPair rz = characteristic_roots(tail_level_risk, p);
            const double coeff = 1.0 / detail::exp_diff_unit_slope(rz, x1);
            push(0.0, x1, ExpDiff{coeff, rz.plus, rz.minus}, tail_level_risk);
            break;
        }
        default:
            break;
    }
    push(x1, kUnreached, tail, tail_level_risk);
    return v;
}

}  // namespace rctl
