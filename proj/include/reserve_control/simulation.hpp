#pragma once

// Feedback policies and Monte Carlo estimation of the discounted-dividend
// functional J_x = E int_0^tau e^{-gamma t} c(R_t) dt under
//
//   dR = (a(R) mu - delta - c(R)) dt + a(R) sigma dW,   absorbed at 0.

#include "reserve_control/feedback.hpp"
#include "reserve_control/model.hpp"
#include "reserve_control/value_function.hpp"

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rctl {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Risk level as a function of the reserve: `below` on [0, x_lo), a tabulated
/// increasing piece on [x_lo, x_hi), `above` from x_hi on. A reversed rule
/// returns alpha + beta - a.
struct RiskRule {
    double below = 0.0;
    double above = 0.0;
    double x_lo = 0.0;
    double x_hi = 0.0;
    double h = 0.0;
    std::vector<double> level;  // a at x_lo + i h
    std::vector<double> slope;  // a' at the same nodes
    bool reversed = false;
    double alpha = 0.0;
    double beta = 0.0;

    static RiskRule constant(double a, const ModelParams& p) {
        RiskRule r;
        r.below = r.above = a;
        r.alpha = p.alpha;
        r.beta = p.beta;
        return r;
    }

    double raw(double x) const {
        if (x < x_lo) return below;
        if (x >= x_hi) return above;
        const double s = (x - x_lo) / h;
        const auto i = std::min(static_cast<std::size_t>(s), level.size() - 2);
        const double t = s - static_cast<double>(i);
        // cubic Hermite on [i, i+1]
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * level[i] + (t3 - 2 * t2 + t) * h * slope[i] +
               (-2 * t3 + 3 * t2) * level[i + 1] + (t3 - t2) * h * slope[i + 1];
    }

    double operator()(double x) const {
        const double a = raw(x);
        return reversed ? alpha + beta - a : a;
    }

    /// Reserve level from which the rule is constant.
    double constant_from() const { return x_hi > x_lo ? x_hi : 0.0; }
};

struct DividendRule {
    double threshold = 0.0;
    double rate = 0.0;

    double operator()(double x) const { return x >= threshold ? rate : 0.0; }
};

struct Policy {
    std::string name;
    RiskRule risk_rule;
    DividendRule dividend_rule;
    double x1 = 0.0;
    bool is_optimal = false;

    /// Both rules are constant on [tail_start(), inf).
    double tail_start() const {
        return std::max(risk_rule.constant_from(), dividend_rule.rate > 0.0 ? dividend_rule.threshold : 0.0);
    }
};

/// Tabulates the increasing piece of the feedback curve with `nodes` knots.
inline RiskRule feedback_risk_rule(const FeedbackCurve& fc, const ModelParams& p,
                                   int nodes = 4097) {
    RiskRule r = RiskRule::constant(fc.lower_level, p);
    r.above = fc.terminal;
    if (!fc.has_ode_piece()) return r;
    r.x_lo = fc.ode_begin;
    r.x_hi = fc.ode_end;
    r.h = (r.x_hi - r.x_lo) / (nodes - 1);
    r.level.resize(nodes);
    r.slope.resize(nodes);
    for (int i = 0; i < nodes; ++i) {
        const double x = i + 1 == nodes ? r.x_hi : r.x_lo + i * r.h;
        const double a = i == 0 ? fc.a_start : i + 1 == nodes ? fc.terminal : a_of_x(x, fc);
        r.level[i] = a;
        r.slope[i] = feedback_slope(a, fc);
    }
    return r;
}

inline Policy optimal_policy(const PiecewiseValue& v, const ModelParams& p) {
    Policy pol;
    pol.name = "optimal";
    pol.risk_rule = feedback_risk_rule(v.curve, p);
    pol.dividend_rule = DividendRule{v.x1, p.M};
    pol.x1 = v.x1;
    pol.is_optimal = true;
    return pol;
}

inline Policy constant_policy(double a, double c, const ModelParams& p) {
    Policy pol;
    pol.name = "constant:a=" + std::to_string(a) + ",c=" + std::to_string(c);
    pol.risk_rule = RiskRule::constant(a, p);
    pol.dividend_rule = DividendRule{0.0, c};
    return pol;
}

/// Optimal risk rule with the dividend barrier moved to `threshold`.
inline Policy shifted_threshold_policy(const PiecewiseValue& v, const ModelParams& p,
                                       double threshold) {
    Policy pol = optimal_policy(v, p);
    pol.name = "threshold:" + std::to_string(threshold);
    pol.dividend_rule.threshold = threshold;
    pol.x1 = threshold;
    pol.is_optimal = false;
    return pol;
}

/// Optimal dividend rule with risk alpha + beta - a*(x).
inline Policy reversed_risk_policy(const PiecewiseValue& v, const ModelParams& p) {
    Policy pol = optimal_policy(v, p);
    pol.name = "reversed-risk";
    pol.risk_rule.reversed = true;
    pol.is_optimal = false;
    return pol;
}

struct SimConfig {
    double dt = 1e-3;
    double horizon = 100.0;
    std::int64_t n_paths = 10000;
    std::uint64_t seed = 1;
    bool antithetic = false;
    // Paths that climb far enough into the constant-coefficient tail are
    // stopped and credited c/gamma e^{-gamma t}; the overshoot is at most
    // escape_tolerance * c/gamma * e^{-gamma t}. Zero disables the shortcut.
    double escape_tolerance = 0.0;
    unsigned threads = 0;  // 0: hardware concurrency
};

struct SimEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double ruin_fraction = 0.0;
    double truncation_bound = 0.0;  // (M/gamma) e^{-gamma horizon}
    double escape_bound = 0.0;      // upper bound on the escape credit's overshoot
    std::int64_t n_paths = 0;
};

inline void validate_sim_config(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("dt must be positive");
    if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon))
        throw ConfigError("horizon must be positive");
    if (cfg.n_paths < 1) throw ConfigError("n_paths must be at least 1");
    if (cfg.antithetic && cfg.n_paths % 2 != 0)
        throw ConfigError("n_paths must be even with antithetic sampling");
    if (!(cfg.escape_tolerance >= 0.0 && cfg.escape_tolerance < 1.0))
        throw ConfigError("escape_tolerance must lie in [0, 1)");
}

/// Horizon T with (M/gamma) e^{-gamma T} <= tol.
inline double horizon_for(const ModelParams& p, double tol) {
    return std::max(1.0, std::log(p.dividend_ceiling() / tol) / p.gamma);
}

namespace detail {

// Independent stream per (seed, stream index).
inline boost::random::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    return boost::random::mt19937_64(seq);
}

struct Escape {
    bool enabled = false;
    double level = kUnreached;
    double credit_rate = 0.0;  // c_tail / gamma
    double bound = 0.0;        // relative overshoot e^{-theta d}
};

// Discounted probability of falling a distance d for drift m and volatility s
// is e^{-theta d}.
inline Escape make_escape(const Policy& pol, const ModelParams& p, double tol) {
    Escape e;
    const double start = pol.tail_start();
    const double a = pol.risk_rule(start + 1.0);
    const double c = pol.dividend_rule(start + 1.0);
    if (c == 0.0) {
        // nothing is ever paid from here on
        e.enabled = true;
        e.level = start;
        return e;
    }
    if (tol <= 0.0) return e;
    const double m = a * p.mu - p.delta - c;
    const double s2 = a * a * p.sigma * p.sigma;
    const double theta = (m + std::sqrt(m * m + 2.0 * p.gamma * s2)) / s2;
    e.enabled = true;
    e.level = start + std::log(1.0 / tol) / theta;
    e.credit_rate = c / p.gamma;
    e.bound = tol;
    return e;
}

struct PathResult {
    double value = 0.0;
    bool ruined = false;
};

template <class Normal>
PathResult run_path(const Policy& pol, double x0, const ModelParams& p, double dt,
                    std::int64_t steps, const Escape& esc, Normal&& normal) {
    const double step_disc = std::exp(-p.gamma * dt);
    const double weight = -std::expm1(-p.gamma * dt) / p.gamma;
    const double sdt = std::sqrt(dt);
    double R = x0, disc = 1.0, acc = 0.0;
    for (std::int64_t n = 0; n < steps; ++n) {
        if (esc.enabled && R >= esc.level) return {acc + esc.credit_rate * disc, false};
        const double a = pol.risk_rule(R);
        const double c = pol.dividend_rule(R);
        const double next = R + (a * p.mu - p.delta - c) * dt + a * p.sigma * sdt * normal();
        if (next <= 0.0) {
            const double frac = R / (R - next);
            acc += c * disc * -std::expm1(-p.gamma * frac * dt) / p.gamma;
            return {acc, true};
        }
        acc += c * disc * weight;
        disc *= step_disc;
        R = next;
    }
    return {acc, false};
}

struct Moments {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::int64_t count = 0;
    std::int64_t ruined = 0;

    void merge(const Moments& o) {
        sum += o.sum;
        sum_sq += o.sum_sq;
        count += o.count;
        ruined += o.ruined;
    }
};

// Runs body(unit) for unit in [0, units) in fixed-size chunks across threads
// and merges the per-chunk moments in chunk order, so the result does not
// depend on the thread count.
template <class Body>
Moments chunked_reduce(std::int64_t units, unsigned threads, Body body) {
    constexpr std::int64_t kChunk = 256;
    const std::int64_t chunks = (units + kChunk - 1) / kChunk;
    std::vector<Moments> partial(static_cast<std::size_t>(chunks));
    auto work = [&](std::int64_t first, std::int64_t stride) {
        for (std::int64_t ch = first; ch < chunks; ch += stride) {
            Moments m;
            const std::int64_t end = std::min(units, (ch + 1) * kChunk);
            for (std::int64_t u = ch * kChunk; u < end; ++u) body(u, m);
            partial[static_cast<std::size_t>(ch)] = m;
        }
    };
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::int64_t>(threads, std::max<std::int64_t>(chunks, 1)));
    if (threads <= 1) {
        work(0, 1);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    }
    Moments total;
    for (const Moments& m : partial) total.merge(m);
    return total;
}

}  // namespace detail

inline SimEstimate simulate_paths(const Policy& pol, double x0, const ModelParams& p,
                                  const SimConfig& cfg) {
    validate_sim_config(cfg);
    if (!(x0 > 0.0)) throw ConfigError("x0 must be positive");
    const auto steps = static_cast<std::int64_t>(std::ceil(cfg.horizon / cfg.dt - 1e-9));
    const detail::Escape esc = detail::make_escape(pol, p, cfg.escape_tolerance);

    // Antithetic pairs share one stream; each pair mean is one sample.
    const std::int64_t units = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
    auto body = [&](std::int64_t u, detail::Moments& m) {
        boost::random::normal_distribution<double> gauss;
        if (!cfg.antithetic) {
            auto eng = detail::path_engine(cfg.seed, static_cast<std::uint64_t>(u));
            const auto r = detail::run_path(pol, x0, p, cfg.dt, steps, esc,
                                            [&] { return gauss(eng); });
            m.sum += r.value;
            m.sum_sq += r.value * r.value;
            m.count += 1;
            m.ruined += r.ruined;
            return;
        }
        auto eng = detail::path_engine(cfg.seed, static_cast<std::uint64_t>(u));
        const auto r1 = detail::run_path(pol, x0, p, cfg.dt, steps, esc,
                                         [&] { return gauss(eng); });
        auto eng2 = detail::path_engine(cfg.seed, static_cast<std::uint64_t>(u));
        gauss.reset();
        const auto r2 = detail::run_path(pol, x0, p, cfg.dt, steps, esc,
                                         [&] { return -gauss(eng2); });
        const double pair = 0.5 * (r1.value + r2.value);
        m.sum += pair;
        m.sum_sq += pair * pair;
        m.count += 1;
        m.ruined += r1.ruined + r2.ruined;
    };
    const detail::Moments tot = detail::chunked_reduce(units, cfg.threads, body);

    SimEstimate est;
    const double n = static_cast<double>(tot.count);
    est.mean = tot.sum / n;
    const double var = n > 1 ? std::max(0.0, (tot.sum_sq - n * est.mean * est.mean) / (n - 1)) : 0.0;
    est.std_error = std::sqrt(var / n);
    est.ruin_fraction = static_cast<double>(tot.ruined) / static_cast<double>(cfg.n_paths);
    est.truncation_bound = p.dividend_ceiling() * std::exp(-p.gamma * cfg.horizon);
    est.escape_bound = esc.credit_rate * esc.bound;
    est.n_paths = cfg.n_paths;
    return est;
}

/// Result of the coupled runs at dt, 2 dt and 4 dt.
struct DiscretizationFit {
    double dt[3] = {0, 0, 0};
    double mean[3] = {0, 0, 0};
    double J0 = 0.0;  // extrapolated dt -> 0 value
    double C = 0.0;   // J(dt) ~ J0 + C sqrt(dt)

    double allowance(double step) const { return std::abs(C) * std::sqrt(step); }
};

/// Fits J(dt) = J0 + C sqrt(dt) from three levels driven by the same Brownian
/// increments (the coarse levels sum consecutive fine increments).
inline DiscretizationFit calibrate_discretization(const Policy& pol, double x0,
                                                  const ModelParams& p, const SimConfig& cfg) {
    validate_sim_config(cfg);
    if (!(x0 > 0.0)) throw ConfigError("x0 must be positive");
    const auto fine_steps = static_cast<std::int64_t>(std::ceil(cfg.horizon / cfg.dt - 1e-9));
    const detail::Escape esc = detail::make_escape(pol, p, cfg.escape_tolerance);

    std::vector<detail::Moments> sums(3);
    // Level k uses step 2^k dt; its normals are sums of 2^k fine normals / 2^{k/2}.
    auto run_level = [&](int k, std::uint64_t path) {
        auto eng = detail::path_engine(cfg.seed, path);
        boost::random::normal_distribution<double> gauss;
        const int group = 1 << k;
        const double norm = 1.0 / std::sqrt(static_cast<double>(group));
        auto normal = [&] {
            double z = 0.0;
            for (int j = 0; j < group; ++j) z += gauss(eng);
            return z * norm;
        };
        return detail::run_path(pol, x0, p, cfg.dt * group, fine_steps / group, esc, normal)
            .value;
    };
    DiscretizationFit fit;
    for (int k = 0; k < 3; ++k) {
        auto body = [&](std::int64_t u, detail::Moments& m) {
            const double val = run_level(k, static_cast<std::uint64_t>(u));
            m.sum += val;
            m.count += 1;
        };
        const detail::Moments tot = detail::chunked_reduce(cfg.n_paths, cfg.threads, body);
        fit.dt[k] = cfg.dt * (1 << k);
        fit.mean[k] = tot.sum / static_cast<double>(tot.count);
    }
    // least squares on (sqrt(dt), mean)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < 3; ++k) {
        const double s = std::sqrt(fit.dt[k]);
        sx += s;
        sy += fit.mean[k];
        sxx += s * s;
        sxy += s * fit.mean[k];
    }
    fit.C = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    fit.J0 = (sy - fit.C * sx) / 3;
    return fit;
}

struct MajorizationEntry {
    std::string policy;
    bool optimal = false;
    double x0 = 0.0;
    SimEstimate estimate;
    double V = 0.0;
    double allowance = 0.0;
    bool passed = false;
};

/// Optimal policy: |mean - V| <= 3 SE + allowance + known one-sided biases.
/// Others: mean <= V + 3 SE.
inline std::vector<MajorizationEntry> majorization_check(const PiecewiseValue& v,
                                                         const ModelParams& p,
                                                         const std::vector<Policy>& policies,
                                                         const std::vector<double>& x0s,
                                                         const SimConfig& cfg,
                                                         double allowance = 0.0) {
    std::vector<MajorizationEntry> out;
    for (const Policy& pol : policies) {
        for (double x0 : x0s) {
            MajorizationEntry e;
            e.policy = pol.name;
            e.optimal = pol.is_optimal;
            e.x0 = x0;
            e.estimate = simulate_paths(pol, x0, p, cfg);
            e.V = eval_value(v, x0, 0);
            e.allowance = allowance;
            const SimEstimate& s = e.estimate;
            if (pol.is_optimal) {
                // the escape credit only overshoots, the horizon cut only undershoots
                const double lo = e.V - 3 * s.std_error - allowance - s.truncation_bound;
                const double hi = e.V + 3 * s.std_error + allowance + s.escape_bound;
                e.passed = s.mean >= lo && s.mean <= hi;
            } else {
                e.passed = s.mean <= e.V + 3 * s.std_error;
            }
            out.push_back(e);
        }
    }
    return out;
}

}  // namespace rctl
