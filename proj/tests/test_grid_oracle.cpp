#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rctl;
using namespace testing_support;

TEST(GridOracle, CanonicalLowDebtAccuracyAndRate) {
    const ModelParams p = with_M(kLow, 2.4);
    const PiecewiseValue v = build_value(p);
    const double L = default_truncation(v);
    const GridSolution coarse = solve_grid(p, L, 2000);
    const GridSolution fine = solve_grid(p, L, 4000);
    const double e1 = compare_with_closed_form(coarse, v);
    const double e2 = compare_with_closed_form(fine, v);
    EXPECT_LE(e2, 1e-3);
    EXPECT_LE(e2 / e1, 0.6);
    EXPECT_TRUE(fine.monotone);
    EXPECT_TRUE(fine.nondecreasing_iterates);
}

TEST(GridOracle, DiscreteSolutionShape) {
    for (const ModelParams& p : {with_M(kMid, 0.5), with_M(kHigh, 0.3), with_M(kVeryHigh, 1.0)}) {
        const PiecewiseValue v = build_value(p);
        const GridSolution g = solve_grid(p, default_truncation(v), 1500);
        EXPECT_EQ(g.values.front(), 0.0);
        for (std::size_t i = 1; i < g.values.size(); ++i) {
            EXPECT_GE(g.values[i], g.values[i - 1] - 1e-12);
            EXPECT_LE(g.values[i], p.dividend_ceiling() * (1 + 1e-12));
        }
        const double h = g.x_grid[1];
        for (std::size_t i = 1; i + 1 < g.values.size(); ++i) {
            const double d2 = g.values[i + 1] - 2 * g.values[i] + g.values[i - 1];
            EXPECT_LE(d2, 1e-9 * p.dividend_ceiling() * h) << i;
        }
    }
}

TEST(GridOracle, DiscreteControlsTrackClosedForm) {
    const ModelParams p = with_M(kLow, 2.4);
    const PiecewiseValue v = build_value(p);
    const GridSolution g = solve_grid(p, default_truncation(v), 4000);
    const double h = g.x_grid[1];
    for (std::size_t i = 1; i + 1 < g.x_grid.size(); ++i) {
        const double x = g.x_grid[i];
        if (std::abs(x - v.x1) > 2 * h) {
            EXPECT_EQ(g.dividend[i], x >= v.x1 ? p.M : 0.0) << x;
        }
        bool near_break = false;
        for (double b : v.breakpoints()) near_break = near_break || std::abs(x - b) <= 2 * h;
        if (!near_break && x < 0.5 * g.L) {
            EXPECT_NEAR(g.risk[i], optimal_risk(v, x), 0.02) << x;
        }
    }
}

TEST(GridOracle, UpwindIsSlowerButConverges) {
    const ModelParams p = with_M(kHigh, 0.3);
    const PiecewiseValue v = build_value(p);
    const double L = default_truncation(v);
    const GridSolution a = solve_grid(p, L, 1000, DriftScheme::Upwind);
    const GridSolution b = solve_grid(p, L, 2000, DriftScheme::Upwind);
    EXPECT_EQ(a.scheme, DriftScheme::Upwind);
    EXPECT_TRUE(a.monotone);
    EXPECT_LE(compare_with_closed_form(b, v) / compare_with_closed_form(a, v), 0.6);
}

TEST(GridOracle, Errors) {
    const ModelParams p = with_M(kLow, 2.4);
    EXPECT_THROW(solve_grid(p, 0.0, 1000), IllConditioned);
    EXPECT_THROW(solve_grid(p, 10.0, 50), IllConditioned);
    // 100 nodes over a long interval cannot keep the centered drift monotone
    EXPECT_FALSE(central_drift_is_monotone(p, 10.0));
    EXPECT_THROW(solve_grid(p, 1000.0, 100, DriftScheme::Central), IllConditioned);
    EXPECT_THROW(solve_grid(p, 10.0, 1000, DriftScheme::Auto, 1), NoConvergence);
}

TEST(GridOracle, DefaultTruncationCoversTail) {
    const PiecewiseValue v = build_value(with_M(kLow, 2.4));
    const double L = default_truncation(v);
    EXPECT_GT(L, v.x1);
    EXPECT_NEAR(std::exp(v.tail_rate() * (L - v.x1)), std::exp(-30.0), 1e-15);
}
