#pragma once

// Model parameters, derived constants and the regime taxonomy for the
// bounded-dividend, risk-constrained reserve control problem
//
//   dR = (a*mu - delta - c) dt + a*sigma dW,   alpha <= a <= beta, 0 <= c <= M.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rctl {

struct ModelParams {
    double mu = 0.0;     // profit rate
    double sigma = 0.0;  // volatility rate
    double delta = 0.0;  // debt payment rate
    double gamma = 0.0;  // discount rate
    double alpha = 0.0;  // minimum risk level
    double beta = 0.0;   // maximum risk level
    double M = 0.0;      // maximum dividend rate

    double dividend_ceiling() const { return M / gamma; }
    double debt_ratio() const { return 2.0 * delta / mu; }
};

enum class ParamErrorKind { NonPositive, OrderViolation, NonFinite };

class ParamError : public std::invalid_argument {
public:
    ParamError(ParamErrorKind kind, std::string field, const std::string& what)
        : std::invalid_argument(what), kind_(kind), field_(std::move(field)) {}

    ParamErrorKind kind() const noexcept { return kind_; }
    const std::string& field() const noexcept { return field_; }

private:
    ParamErrorKind kind_;
    std::string field_;
};

inline ModelParams validate_params(double mu, double sigma, double delta, double gamma,
                                   double alpha, double beta, double M) {
    const std::pair<const char*, double> fields[] = {
        {"mu", mu},       {"sigma", sigma}, {"delta", delta}, {"gamma", gamma},
        {"alpha", alpha}, {"beta", beta},   {"M", M}};
    for (const auto& [name, value] : fields) {
        if (!std::isfinite(value))
            throw ParamError(ParamErrorKind::NonFinite, name,
                             std::string("parameter '") + name + "' is not finite");
    }
    for (const auto& [name, value] : fields) {
        const bool allow_zero = std::string_view(name) == "delta";
        if (value < 0.0 || (!allow_zero && value == 0.0))
            throw ParamError(ParamErrorKind::NonPositive, name,
                             std::string("parameter '") + name + "' must be " +
                                 (allow_zero ? "non-negative" : "positive"));
    }
    if (alpha >= beta)
        throw ParamError(ParamErrorKind::OrderViolation, "alpha",
                         "risk bounds must satisfy alpha < beta");
    return ModelParams{mu, sigma, delta, gamma, alpha, beta, M};
}

inline ModelParams validate_params(const ModelParams& raw) {
    return validate_params(raw.mu, raw.sigma, raw.delta, raw.gamma, raw.alpha, raw.beta,
                           raw.M);
}

struct RootPair {
    double plus = 0.0;
    double minus = 0.0;
};

namespace detail {

// Roots of 0.5*sigma^2*z^2*r^2 + b*r - gamma = 0. The larger-magnitude root is
// computed directly, the other from the product of roots -2*gamma/(sigma^2 z^2).
inline RootPair solve_characteristic(double z, double b, const ModelParams& p) {
    const double lead = p.sigma * p.sigma * z * z;
    const double root_disc = std::sqrt(b * b + 2.0 * p.gamma * lead);
    const double product = -2.0 * p.gamma / lead;
    RootPair r;
    if (b >= 0.0) {
        r.minus = (-b - root_disc) / lead;
        r.plus = product / r.minus;
    } else {
        r.plus = (-b + root_disc) / lead;
        r.minus = product / r.plus;
    }
    return r;
}

}  // namespace detail

/// Roots of the pre-dividend characteristic equation at constant risk level z.
inline RootPair characteristic_roots(double z, const ModelParams& p) {
    if (!(z > 0.0)) throw std::domain_error("characteristic_roots: z must be positive");
    return detail::solve_characteristic(z, z * p.mu - p.delta, p);
}

/// Roots when dividends are paid at the maximal rate M.
inline RootPair post_dividend_roots(double z, const ModelParams& p) {
    if (!(z > 0.0)) throw std::domain_error("post_dividend_roots: z must be positive");
    return detail::solve_characteristic(z, z * p.mu - p.delta - p.M, p);
}

/// Dividend-cap threshold M_z: the value of M at which the post-dividend
/// fixed point equals z.
inline double dividend_cap_threshold(double z, const ModelParams& p) {
    const double denom = p.mu * p.mu + 2.0 * p.gamma * p.sigma * p.sigma;
    return (z - 2.0 * p.delta * p.mu / denom) * denom / (2.0 * p.mu);
}

/// Zero-threshold cap M0(z); defined only for z*mu > delta.
inline std::optional<double> zero_threshold(double z, const ModelParams& p) {
    const double excess = z * p.mu - p.delta;
    if (!(excess > 0.0)) return std::nullopt;
    return z * z * p.sigma * p.sigma * p.gamma / (2.0 * excess);
}

struct DerivedConstants {
    double c = 0.0;        // fixed point of the risk ODE below the threshold
    double c_tilde = 0.0;  // fixed point once dividends are paid
    double Gamma = 0.0;    // mu^2 / (mu^2 + 2 gamma sigma^2)
    double scale = 0.0;    // mu sigma^2 / (mu^2 + 2 gamma sigma^2)
    double M_alpha = 0.0;
    double M_beta = 0.0;
    std::optional<double> M0_alpha;
    std::optional<double> M0_beta;
    std::optional<double> M0_mid;  // at z = 2 delta / mu
};

inline DerivedConstants derived_constants(const ModelParams& p) {
    const double denom = p.mu * p.mu + 2.0 * p.gamma * p.sigma * p.sigma;
    DerivedConstants k;
    k.c = 2.0 * p.delta * p.mu / denom;
    k.c_tilde = 2.0 * p.mu * (p.delta + p.M) / denom;
    k.Gamma = p.mu * p.mu / denom;
    k.scale = p.mu * p.sigma * p.sigma / denom;
    k.M_alpha = dividend_cap_threshold(p.alpha, p);
    k.M_beta = dividend_cap_threshold(p.beta, p);
    k.M0_alpha = zero_threshold(p.alpha, p);
    k.M0_beta = zero_threshold(p.beta, p);
    k.M0_mid = zero_threshold(p.debt_ratio(), p);
    return k;
}

enum class DebtCase {
    LowDebt,      // 2 delta/mu < alpha
    MidDebt,      // alpha <= 2 delta/mu < beta
    HighDebt,     // delta/mu < beta <= 2 delta/mu
    VeryHighDebt  // beta mu <= delta
};

// Qualitative shape of the solution for a given M. Read together with the
// debt case; the threshold-free cases have x1 = 0.
enum class DividendCase {
    BetaTail,        // curve rises to beta before x1; beta band then beta tail
    SaturatedTail,   // curve rises to c_tilde at x1 and stays there
    AlphaThreshold,  // risk alpha throughout, x1 > 0
    BetaThreshold,   // risk beta throughout, x1 > 0
    BetaImmediate,   // x1 = 0, risk beta
    TildeImmediate,  // x1 = 0, risk c_tilde
    AlphaImmediate   // x1 = 0, risk alpha
};

struct Regime {
    DebtCase debt_case = DebtCase::LowDebt;
    DividendCase m_subcase = DividendCase::AlphaImmediate;
    bool x1_positive = false;

    friend bool operator==(const Regime&, const Regime&) = default;
};

inline DebtCase classify_debt(const ModelParams& p) {
    const double two_delta = 2.0 * p.delta;
    if (two_delta < p.alpha * p.mu) return DebtCase::LowDebt;
    if (two_delta < p.beta * p.mu) return DebtCase::MidDebt;
    if (p.delta < p.beta * p.mu) return DebtCase::HighDebt;
    return DebtCase::VeryHighDebt;
}

// Boundary values of M go to the branch whose closed form stays valid there:
// M_alpha < M <= M_beta for low debt, M >= M_beta for mid debt and
// M_alpha <= M < M_beta for the two high-debt cases.
inline Regime classify_regime(const ModelParams& p) {
    const DerivedConstants k = derived_constants(p);
    Regime r;
    r.debt_case = classify_debt(p);
    const double M = p.M;
    switch (r.debt_case) {
        case DebtCase::LowDebt: {
            const double m0 = *k.M0_alpha;
            if (M > k.M_beta)
                r.m_subcase = DividendCase::BetaTail;
            else if (M > k.M_alpha)
                r.m_subcase = DividendCase::SaturatedTail;
            else if (M > m0)
                r.m_subcase = DividendCase::AlphaThreshold;
            else
                r.m_subcase = DividendCase::AlphaImmediate;
            r.x1_positive = M > m0;
            break;
        }
        case DebtCase::MidDebt: {
            const double m0 = *k.M0_mid;
            if (M >= k.M_beta)
                r.m_subcase = DividendCase::BetaTail;
            else if (M > m0)
                r.m_subcase = DividendCase::SaturatedTail;
            else if (M > k.M_alpha)
                r.m_subcase = DividendCase::TildeImmediate;
            else
                r.m_subcase = DividendCase::AlphaImmediate;
            r.x1_positive = M > m0;
            break;
        }
        case DebtCase::HighDebt: {
            const double m0 = *k.M0_beta;
            if (M > m0)
                r.m_subcase = DividendCase::BetaThreshold;
            else if (M >= k.M_beta)
                r.m_subcase = DividendCase::BetaImmediate;
            else if (M >= k.M_alpha)
                r.m_subcase = DividendCase::TildeImmediate;
            else
                r.m_subcase = DividendCase::AlphaImmediate;
            r.x1_positive = M > m0;
            break;
        }
        case DebtCase::VeryHighDebt: {
            if (M >= k.M_beta)
                r.m_subcase = DividendCase::BetaImmediate;
            else if (M >= k.M_alpha)
                r.m_subcase = DividendCase::TildeImmediate;
            else
                r.m_subcase = DividendCase::AlphaImmediate;
            r.x1_positive = false;
            break;
        }
    }
    return r;
}

inline std::string_view to_string(DebtCase d) {
    switch (d) {
        case DebtCase::LowDebt: return "LowDebt";
        case DebtCase::MidDebt: return "MidDebt";
        case DebtCase::HighDebt: return "HighDebt";
        case DebtCase::VeryHighDebt: return "VeryHighDebt";
    }
    return "?";
}

inline std::string_view to_string(DividendCase d) {
    switch (d) {
        case DividendCase::BetaTail: return "BetaTail";
        case DividendCase::SaturatedTail: return "SaturatedTail";
        case DividendCase::AlphaThreshold: return "AlphaThreshold";
        case DividendCase::BetaThreshold: return "BetaThreshold";
        case DividendCase::BetaImmediate: return "BetaImmediate";
        case DividendCase::TildeImmediate: return "TildeImmediate";
        case DividendCase::AlphaImmediate: return "AlphaImmediate";
    }
    return "?";
}

/// Human-readable M range of the subcase, e.g. "M_alpha < M <= M_beta".
inline std::string_view m_range_label(const Regime& r) {
    switch (r.debt_case) {
        case DebtCase::LowDebt:
            switch (r.m_subcase) {
                case DividendCase::BetaTail: return "M > M_beta";
                case DividendCase::SaturatedTail: return "M_alpha < M <= M_beta";
                case DividendCase::AlphaThreshold: return "M0(alpha) < M <= M_alpha";
                default: return "M <= M0(alpha)";
            }
        case DebtCase::MidDebt:
            switch (r.m_subcase) {
                case DividendCase::BetaTail: return "M >= M_beta";
                case DividendCase::SaturatedTail: return "M0(2delta/mu) < M < M_beta";
                case DividendCase::TildeImmediate: return "M_alpha < M <= M0(2delta/mu)";
                default: return "M <= M_alpha";
            }
        case DebtCase::HighDebt:
        case DebtCase::VeryHighDebt:
            switch (r.m_subcase) {
                case DividendCase::BetaThreshold: return "M > M0(beta)";
                case DividendCase::BetaImmediate:
                    return r.debt_case == DebtCase::HighDebt ? "M_beta <= M <= M0(beta)"
                                                             : "M >= M_beta";
                case DividendCase::TildeImmediate: return "M_alpha <= M < M_beta";
                default: return "M < M_alpha";
            }
    }
    return "?";
}

}  // namespace rctl
