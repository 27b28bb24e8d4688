// Acceptance run: one PASS/FAIL line per criterion with the measured figures.
// Pass criterion numbers as arguments to run a subset, e.g. `acceptance 1 5`.

#include "reserve_control/reserve_control.hpp"
#include "table_expectations.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

using namespace rctl;
using namespace testing_support;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool passed = true;
    std::string detail;
};

int failures = 0;

void report(int id, const char* title, const Outcome& o, double secs, double budget = 0.0) {
    const bool in_time = budget <= 0.0 || secs < budget;
    const bool ok = o.passed && in_time;
    failures += !ok;
    std::printf("[%s] %d %s: %s; %.2f s", ok ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    if (budget > 0.0) std::printf(" (budget %.0f s%s)", budget, in_time ? "" : ", exceeded");
    std::printf("\n");
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Canonical sets crossed with one M in every non-empty subcase range.
std::vector<Combo> canonical_combos() {
    std::vector<Combo> out;
    for (const Combo& c : all_combos())
        if (c.label.rfind("low/", 0) == 0 || c.label.rfind("mid/", 0) == 0 ||
            c.label.rfind("high/", 0) == 0 || c.label.rfind("veryhigh/", 0) == 0)
            out.push_back(c);
    return out;
}

Outcome identities() {
    std::mt19937_64 rng(1);
    int bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const ModelParams p = random_params(rng);
        for (const IdentityCheck& c : root_identities(p, 1e-12)) {
            bad += !c.passed;
            worst = std::max(worst, std::abs(c.lhs - c.rhs) / std::max({std::abs(c.lhs), std::abs(c.rhs), 1.0}));
        }
        for (const IdentityCheck& c : threshold_orderings(p)) bad += !c.passed;
    }
    return {bad == 0, std::to_string(bad) + " failed checks over 1000 sets, worst scaled gap " +
                          fmt("%.2e", worst)};
}

Outcome hjb_residuals() {
    double worst = 0.0;
    std::string where;
    for (const Combo& c : canonical_combos()) {
        const ResidualReport r = smooth_fit_report(build_value(c.params), 1000);
        if (r.max_abs_residual > worst) worst = r.max_abs_residual, where = c.label;
    }
    return {worst <= 1e-7, "max normalized residual " + fmt("%.2e", worst) + " (" + where +
                               ") over " + std::to_string(canonical_combos().size()) +
                               " combinations, limit 1e-7"};
}

Outcome smooth_fit() {
    double worst_gap = 0.0, worst_slope = 0.0;
    int count = 0;
    for (const Combo& c : all_combos()) {
        const PiecewiseValue v = build_value(c.params);
        const double scale = c.params.dividend_ceiling();
        for (const BreakpointGap& g : smooth_fit_report(v, 10).breakpoint_gaps) {
            worst_gap = std::max({worst_gap, std::abs(g.dV) / scale, std::abs(g.d1V) / scale,
                                  std::abs(g.d2V) / scale});
            ++count;
        }
        if (v.x1 > 0.0) worst_slope = std::max(worst_slope, std::abs(eval_value(v, v.x1, 1) - 1.0));
    }
    return {worst_gap <= 1e-9 && worst_slope <= 1e-9,
            std::to_string(count) + " breakpoints, worst gap " + fmt("%.2e", worst_gap) +
                " x M/gamma, worst |V'(x1) - 1| " + fmt("%.2e", worst_slope) + ", limit 1e-9"};
}

Outcome shape() {
    int bad = 0;
    std::string which;
    for (const Combo& c : all_combos()) {
        const PiecewiseValue v = build_value(c.params);
        const ShapeReport s = shape_check(v, interior_grid(v, evaluation_span(v), 1000));
        if (!(s.zero_at_origin && s.increasing && s.concave && s.bounded)) {
            ++bad;
            which += " " + c.label;
        }
    }
    return {bad == 0, std::to_string(all_combos().size() - bad) + "/" +
                          std::to_string(all_combos().size()) +
                          " combinations with V(0)=0, V'>0, V''<0, V<=M/gamma" + which};
}

Outcome grid_oracle() {
    double worst_err = 0.0, worst_ratio = 0.0;
    std::string err_at, ratio_at;
    bool ok = true;
    for (const Combo& c : all_combos()) {
        const PiecewiseValue v = build_value(c.params);
        const double L = default_truncation(v);
        const double e1 = compare_with_closed_form(solve_grid(c.params, L, 4000), v);
        const double e2 = compare_with_closed_form(solve_grid(c.params, L, 8000), v);
        const double ratio = e2 / e1;
        if (e1 > worst_err) worst_err = e1, err_at = c.label;
        if (ratio > worst_ratio) worst_ratio = ratio, ratio_at = c.label;
        ok = ok && e1 <= 1e-3 && ratio <= 0.6;
    }
    return {ok, "worst error at n=4000 " + fmt("%.2e", worst_err) + " (" + err_at +
                    "), worst ratio n=8000/n=4000 " + fmt("%.3f", worst_ratio) + " (" + ratio_at +
                    "); limits 1e-3 and 0.6"};
}

std::vector<double> test_points(const PiecewiseValue& v) {
    if (v.x1 > 0.0) return {0.5 * v.x1, v.x1, 2.0 * v.x1};
    return {0.5, 1.0, 2.0};
}

SimConfig mc_config(const ModelParams& p) {
    SimConfig cfg;
    cfg.dt = 1e-3;
    cfg.n_paths = 100000;
    cfg.horizon = horizon_for(p, 1e-4 * p.dividend_ceiling());
    cfg.escape_tolerance = 1e-4;
    return cfg;
}

Outcome mc_optimality() {
    // one set with x1 > 0 and one with x1 = 0
    const ModelParams sets[] = {with_M(kLow, 2.4), with_M(kVeryHigh, 1.0)};
    const char* names[] = {"low/BetaTail", "veryhigh/BetaImmediate"};
    Outcome out;
    for (int s = 0; s < 2; ++s) {
        const ModelParams& p = sets[s];
        const PiecewiseValue v = build_value(p);
        const Policy pol = optimal_policy(v, p);
        SimConfig cfg = mc_config(p);
        int pass = 0, total = 0;
        double worst_excess = -kUnreached;
        for (double x0 : test_points(v)) {
            SimConfig cal = cfg;
            cal.seed = 0x9e3779b97f4a7c15ULL;
            const double allowance = calibrate_discretization(pol, x0, p, cal).allowance(cfg.dt);
            for (std::uint64_t seed = 1; seed <= 20; ++seed) {
                cfg.seed = seed;
                const MajorizationEntry e = majorization_check(v, p, {pol}, {x0}, cfg, allowance).front();
                pass += e.passed;
                ++total;
                const double excess = (std::abs(e.estimate.mean - e.V) - allowance) / e.estimate.std_error;
                worst_excess = std::max(worst_excess, excess);
            }
        }
        const bool ok = pass >= 0.95 * total;
        out.passed = out.passed && ok;
        out.detail += std::string(out.detail.empty() ? "" : "; ") + names[s] + " " +
                      std::to_string(pass) + "/" + std::to_string(total) +
                      " repetitions within 3 SE + allowance (worst (|J-V|-allowance)/SE " +
                      fmt("%.2f", worst_excess) + ")";
    }
    return out;
}

Outcome mc_majorization() {
    const ModelParams sets[] = {with_M(kLow, 2.4), with_M(kMid, 2.0), with_M(kHigh, 0.3),
                                with_M(kVeryHigh, 1.0)};
    int pass = 0, total = 0;
    std::string misses;
    for (const ModelParams& p : sets) {
        const PiecewiseValue v = build_value(p);
        const double shifted = v.x1 > 0.0 ? 2.0 * v.x1 : 1.0;
        std::vector<Policy> policies = {constant_policy(p.alpha, p.M, p)};
        // with x1 = 0 and beta everywhere, constant beta at rate M is the optimum itself
        if (!(v.x1 == 0.0 && optimal_risk(v, 0.0) == p.beta))
            policies.push_back(constant_policy(p.beta, p.M, p));
        policies.push_back(constant_policy(p.beta, 0.0, p));
        policies.push_back(shifted_threshold_policy(v, p, shifted));
        policies.push_back(reversed_risk_policy(v, p));
        SimConfig cfg = mc_config(p);
        cfg.n_paths = 20000;
        cfg.seed = 2024;
        for (const MajorizationEntry& e : majorization_check(v, p, policies, test_points(v), cfg)) {
            pass += e.passed;
            ++total;
            if (!e.passed)
                misses += " [" + std::string(to_string(v.regime.debt_case)) + " " + e.policy +
                          " x0=" + fmt("%.3g", e.x0) + " J=" + fmt("%.5g", e.estimate.mean) +
                          " V=" + fmt("%.5g", e.V) + "]";
        }
    }
    return {pass == total, std::to_string(pass) + "/" + std::to_string(total) +
                               " policy/x0 pairs with J <= V + 3 SE" + misses};
}

Outcome table_rows() {
    const std::pair<const char*, ModelParams> bases[] = {
        {"low", kLow},           {"mid", kMid},           {"mid-wide", kMidWide},
        {"high", kHigh},         {"high-wide", kHighWide}, {"mid-at-alpha", ModelParams{2, 1, 1, 0.1, 1, 2, 1}},
        {"veryhigh-wide", kVeryHighWide}};
    int rows = 0, bad = 0;
    std::string misses;
    for (const auto& [name, base] : bases) {
        const DerivedConstants k = derived_constants(base);
        std::vector<double> bounds = m_boundaries(base);
        if (bounds.empty()) bounds = {k.M_beta};
        const double top = 2.0 * std::max(bounds.back(), 0.5);
        std::vector<double> values = sweep_values(base, "M", top / 400.0, top, 80, true);
        // the boundaries themselves and points just either side of each
        for (double b : {k.M_alpha, k.M_beta}) {
            if (b > 0.0) {
                values.push_back(b);
                values.push_back(b * (1 - 1e-9));
                values.push_back(b * (1 + 1e-9));
            }
        }
        for (const auto& b : {k.M0_alpha, k.M0_mid, k.M0_beta})
            if (b) {
                values.push_back(*b * (1 - 1e-9));
                values.push_back(*b * (1 + 1e-9));
            }
        for (const TableRow& row : sweep(base, "M", values)) {
            ++rows;
            if (!(observed_row(row) == expected_row(row.params))) {
                ++bad;
                if (bad <= 3) misses += std::string(" [") + name + " M=" + fmt("%.17g", row.params.M) + "]";
            }
        }
    }
    return {bad == 0, std::to_string(rows - bad) + "/" + std::to_string(rows) +
                          " sweep rows match the regime tables" + misses};
}

Outcome continuity() {
    struct Case {
        const char* name;
        ModelParams base;
        double M;
    };
    std::vector<Case> cases;
    auto add = [&](const char* set, const ModelParams& base) {
        const DerivedConstants k = derived_constants(base);
        const DebtCase d = classify_debt(base);
        if (k.M_alpha > 0.0) cases.push_back({set, base, k.M_alpha});
        if (k.M_beta > 0.0) cases.push_back({set, base, k.M_beta});
        if (d == DebtCase::LowDebt) cases.push_back({set, base, *k.M0_alpha});
        if (d == DebtCase::MidDebt) cases.push_back({set, base, *k.M0_mid});
        if (d == DebtCase::HighDebt) cases.push_back({set, base, *k.M0_beta});
    };
    add("low", kLow);
    add("mid", kMid);
    add("mid-wide", kMidWide);
    add("high", kHigh);
    add("high-wide", kHighWide);
    add("veryhigh-wide", kVeryHighWide);
    double worst = 0.0;
    int crossings = 0;
    for (const Case& c : cases) {
        const PiecewiseValue lo = build_value(with_M(c.base, c.M * (1 - 1e-9)));
        const PiecewiseValue at = build_value(with_M(c.base, c.M));
        const PiecewiseValue hi = build_value(with_M(c.base, c.M * (1 + 1e-9)));
        crossings += lo.regime.m_subcase != hi.regime.m_subcase;
        const double span = std::max(at.x1, 1.0);
        for (double t : {0.1, 0.5, 1.0, 2.0, 4.0}) {
            const double x = t * span;
            const double V = eval_value(at, x, 0);
            worst = std::max({worst, std::abs(eval_value(lo, x, 0) - V), std::abs(eval_value(hi, x, 0) - V)});
        }
    }
    return {worst <= 1e-4 && crossings == static_cast<int>(cases.size()),
            std::to_string(cases.size()) + " boundaries (" + std::to_string(crossings) +
                " switch subcase), worst |dV| at 5 probes " + fmt("%.2e", worst) + ", limit 1e-4"};
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto wanted = [&](int id) { return only.empty() || only.count(id) > 0; };

    struct Item {
        int id;
        const char* title;
        std::function<Outcome()> run;
        double budget;
    };
    const Item items[] = {
        {1, "identity suite", identities, 1.0},
        {2, "HJB residual", hjb_residuals, 5.0},
        {3, "smooth fit", smooth_fit, 0.0},
        {4, "shape suite", shape, 0.0},
        {5, "grid oracle", grid_oracle, 30.0},
        {6, "Monte Carlo optimality", mc_optimality, 120.0},
        {7, "Monte Carlo majorization", mc_majorization, 0.0},
        {8, "table reproduction", table_rows, 0.0},
        {9, "branch continuity", continuity, 0.0},
    };
    for (const Item& it : items) {
        if (!wanted(it.id)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = it.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        report(it.id, it.title, o, seconds_since(t0), it.budget);
    }
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
