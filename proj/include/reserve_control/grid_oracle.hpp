#pragma once

// Closed-form-free cross-check: policy iteration on a monotone finite
// difference discretization of the HJB equation on [0, L] with V(0) = 0 and
// V(L) = M/gamma. The diffusion term is always centered. The drift term is
// upwinded, or centered when the grid is fine enough that centering keeps every
// off-diagonal coefficient nonnegative (cell Peclet number at most 1 for all
// admissible controls).

#include "reserve_control/model.hpp"
#include "reserve_control/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace rctl {

class NoConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IllConditioned : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class DriftScheme {
    Auto,     // Central when it is monotone on this grid, Upwind otherwise
    Upwind,
    Central,  // rejected with IllConditioned when it would not be monotone
};

struct GridSolution {
    std::vector<double> x_grid;
    std::vector<double> values;
    std::vector<double> risk;      // a at each node
    std::vector<double> dividend;  // c at each node, 0 or M
    int iterations = 0;
    double L = 0.0;
    DriftScheme scheme = DriftScheme::Upwind;  // the one actually used
    bool monotone = true;           // nonnegative off-diagonals at the final controls
    bool nondecreasing_iterates = true;  // policy iteration never lowered a node value
};

/// Default truncation point: x1 plus 30 decay lengths of the terminal exponential.
inline double default_truncation(const PiecewiseValue& v) {
    return v.x1 + 30.0 / std::abs(v.tail_rate());
}

namespace detail {

struct NodeControl {
    double a = 0.0;
    double c = 0.0;
    double value = 0.0;
};

// Maximizes the upwinded Hamiltonian at one node. For fixed c the drift sign
// changes at a = (delta + c)/mu, and on each side the expression is a quadratic
// in a.
inline NodeControl best_node_control(const ModelParams& p, double d2, double dp, double dm,
                                     bool central) {
    if (central) {
        // one linear coefficient: the clamped vertex is optimal for each c
        const double s2 = p.sigma * p.sigma;
        const double d1 = 0.5 * (dp + dm);
        NodeControl best{p.alpha, 0.0, -std::numeric_limits<double>::infinity()};
        for (double c : {0.0, p.M}) {
            double a;
            if (d2 < 0.0) {
                a = std::clamp(-p.mu * d1 / (s2 * d2), p.alpha, p.beta);
            } else {
                a = 0.5 * s2 * p.beta * p.beta * d2 + p.beta * p.mu * d1 >=
                            0.5 * s2 * p.alpha * p.alpha * d2 + p.alpha * p.mu * d1
                        ? p.beta
                        : p.alpha;
            }
            const double val = 0.5 * s2 * a * a * d2 + (a * p.mu - p.delta - c) * d1 + c;
            if (val > best.value) best = {a, c, val};
        }
        return best;
    }
    const double s2 = p.sigma * p.sigma;
    NodeControl best{p.alpha, 0.0, -std::numeric_limits<double>::infinity()};
    for (double c : {0.0, p.M}) {
        auto h = [&](double a) {
            const double b = a * p.mu - p.delta - c;
            return 0.5 * s2 * a * a * d2 + (b > 0.0 ? b * dp : b * dm) + c;
        };
        const double split = std::clamp((p.delta + c) / p.mu, p.alpha, p.beta);
        double cands[6] = {p.alpha, p.beta, split, p.alpha, p.alpha, p.alpha};
        int k = 3;
        if (d2 < 0.0) {
            for (double d : {dp, dm}) {
                const double vertex = -p.mu * d / (s2 * d2);
                cands[k++] = std::clamp(vertex, p.alpha, p.beta);
            }
        }
        for (int i = 0; i < k; ++i) {
            const double val = h(cands[i]);
            if (val > best.value) best = {cands[i], c, val};
        }
    }
    return best;
}

// Solves lower[i] u[i-1] + diag[i] u[i] + upper[i] u[i+1] = rhs[i] in place.
inline void solve_tridiagonal(std::vector<double>& lower, std::vector<double>& diag,
                              std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        if (!(std::abs(diag[i - 1]) > 0.0) || !std::isfinite(diag[i - 1]))
            throw IllConditioned("solve_grid: zero pivot in tridiagonal elimination");
        const double m = lower[i] / diag[i - 1];
        diag[i] -= m * upper[i - 1];
        rhs[i] -= m * rhs[i - 1];
    }
    if (!(std::abs(diag[n - 1]) > 0.0)) throw IllConditioned("solve_grid: singular system");
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - upper[i] * rhs[i + 1]) / diag[i];
}

}  // namespace detail

/// True when centered drift differences give nonnegative off-diagonals for
/// every a in [alpha, beta] and c in [0, M] on spacing h.
inline bool central_drift_is_monotone(const ModelParams& p, double h) {
    const double min_diff = 0.5 * p.sigma * p.sigma * p.alpha * p.alpha / (h * h);
    const double max_drift = std::max({std::abs(p.alpha * p.mu - p.delta),
                                       std::abs(p.beta * p.mu - p.delta),
                                       std::abs(p.alpha * p.mu - p.delta - p.M),
                                       std::abs(p.beta * p.mu - p.delta - p.M)});
    return min_diff >= max_drift / (2.0 * h);
}

inline GridSolution solve_grid(const ModelParams& p, double L, int n,
                               DriftScheme scheme = DriftScheme::Auto, int max_iterations = 200) {
    if (!(L > 0.0) || !std::isfinite(L)) throw IllConditioned("solve_grid: L must be positive");
    if (n < 100) throw IllConditioned("solve_grid: at least 100 nodes are required");
    const double h = L / (n - 1);
    const double ceiling = p.dividend_ceiling();
    const double s2 = p.sigma * p.sigma;
    const bool central_ok = central_drift_is_monotone(p, h);
    if (scheme == DriftScheme::Central && !central_ok)
        throw IllConditioned("solve_grid: centered drift is not monotone on this grid");
    const bool central = scheme == DriftScheme::Central || (scheme == DriftScheme::Auto && central_ok);

    GridSolution g;
    g.L = L;
    g.scheme = central ? DriftScheme::Central : DriftScheme::Upwind;
    g.x_grid.resize(n);
    for (int i = 0; i < n; ++i) g.x_grid[i] = i * h;
    g.x_grid[n - 1] = L;
    g.values.assign(n, 0.0);
    g.risk.assign(n, p.alpha);
    g.dividend.assign(n, 0.0);

    // Initial controls are the greedy ones for a linear guess.
    std::vector<double>& V = g.values;
    for (int i = 0; i < n; ++i) V[i] = ceiling * g.x_grid[i] / L;

    std::vector<double> lower(n), diag(n), upper(n), rhs(n), prev;
    auto improve = [&](int i) {
        const double d2 = (V[i + 1] - 2 * V[i] + V[i - 1]) / (h * h);
        const double dp = (V[i + 1] - V[i]) / h;
        const double dm = (V[i] - V[i - 1]) / h;
        const detail::NodeControl nc = detail::best_node_control(p, d2, dp, dm, central);
        // keep the incumbent unless the challenger is strictly better, to avoid cycling
        const double a0 = g.risk[i], c0 = g.dividend[i];
        const double b0 = a0 * p.mu - p.delta - c0;
        const double drift0 = central ? b0 * 0.5 * (dp + dm) : (b0 > 0.0 ? b0 * dp : b0 * dm);
        const double h0 = 0.5 * s2 * a0 * a0 * d2 + drift0 + c0;
        if (nc.value > h0 + 1e-14 * (std::abs(h0) + 1.0)) {
            g.risk[i] = nc.a;
            g.dividend[i] = nc.c;
        }
    };
    for (int i = 1; i + 1 < n; ++i) improve(i);

    for (int iter = 1; iter <= max_iterations; ++iter) {
        // policy evaluation
        lower[0] = upper[0] = 0.0;
        diag[0] = 1.0;
        rhs[0] = 0.0;
        lower[n - 1] = upper[n - 1] = 0.0;
        diag[n - 1] = 1.0;
        rhs[n - 1] = ceiling;
        bool monotone = true;
        for (int i = 1; i + 1 < n; ++i) {
            const double a = g.risk[i], c = g.dividend[i];
            const double b = a * p.mu - p.delta - c;
            const double diff = 0.5 * s2 * a * a / (h * h);
            const double lo = central ? diff - b / (2.0 * h) : diff + std::max(-b, 0.0) / h;
            const double up = central ? diff + b / (2.0 * h) : diff + std::max(b, 0.0) / h;
            if (!(lo >= 0.0 && up >= 0.0)) monotone = false;
            lower[i] = -lo;
            upper[i] = -up;
            diag[i] = lo + up + p.gamma;
            rhs[i] = c;
        }
        prev = V;
        rhs.swap(V);
        detail::solve_tridiagonal(lower, diag, upper, V);
        rhs.resize(n);

        double change = 0.0;
        for (int i = 0; i < n; ++i) {
            change = std::max(change, std::abs(V[i] - prev[i]));
            if (iter > 1 && V[i] < prev[i] - 1e-9 * ceiling) g.nondecreasing_iterates = false;
        }
        g.iterations = iter;
        if (iter > 1 && change <= 1e-10 * ceiling) {
            g.monotone = monotone;
            return g;
        }
        for (int i = 1; i + 1 < n; ++i) improve(i);
    }
    throw NoConvergence("solve_grid: policy iteration did not converge");
}

/// max |V_grid - V| / (M/gamma) over nodes in [0, 0.8 L].
inline double compare_with_closed_form(const GridSolution& g, const PiecewiseValue& v) {
    const double ceiling = v.params.dividend_ceiling();
    double worst = 0.0;
    for (std::size_t i = 0; i < g.x_grid.size(); ++i) {
        if (g.x_grid[i] > 0.8 * g.L) break;
        worst = std::max(worst, std::abs(g.values[i] - eval_value(v, g.x_grid[i], 0)) / ceiling);
    }
    return worst;
}

}  // namespace rctl
