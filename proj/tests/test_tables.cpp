#include "table_expectations.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace rctl;
using namespace testing_support;

namespace {

void expect_sweep_matches(const ModelParams& base, const char* label) {
    const auto bounds = m_boundaries(base);
    ASSERT_FALSE(bounds.empty()) << label;
    const double top = 2.0 * bounds.back();
    const auto values = sweep_values(base, "M", top / 200.0, top, 60, true);
    for (const TableRow& row : sweep(base, "M", values)) {
        const ExpectedRow want = expected_row(row.params);
        const ExpectedRow got = observed_row(row);
        EXPECT_TRUE(got == want) << label << " M=" << row.params.M << " ("
                                 << to_string(row.regime.m_subcase) << ")\n  want " << describe(want)
                                 << "\n  got  " << describe(got);
    }
}

}  // namespace

TEST(Tables, PositionClass) {
    EXPECT_EQ(position_class(0.0), "0");
    EXPECT_EQ(position_class(0.3), "positive");
    EXPECT_EQ(position_class(kUnreached), "inf");
}

TEST(Tables, SweepValuesContainBoundaries) {
    const auto b = m_boundaries(kLow);
    ASSERT_GE(b.size(), 4u);
    const auto vals = sweep_values(kLow, "M", 0.01, 2.0, 10, true);
    for (double x : b) EXPECT_NE(std::find(vals.begin(), vals.end(), x), vals.end());
    EXPECT_TRUE(std::is_sorted(vals.begin(), vals.end()));
    EXPECT_EQ(sweep_values(kLow, "gamma", 0.1, 0.2, 2, true).size(), 3u);
    EXPECT_THROW(sweep_values(kLow, "M", 0.1, 0.2, 0), std::invalid_argument);
    ModelParams p = kLow;
    EXPECT_THROW(param_field(p, "rho"), std::invalid_argument);
}

TEST(Tables, LowDebtRows) {
    expect_sweep_matches(kLow, "low");
}

TEST(Tables, MidDebtRows) {
    expect_sweep_matches(kMid, "mid");
    expect_sweep_matches(kMidWide, "mid-wide");
    // 2 delta/mu == alpha: the increasing piece starts at alpha
    expect_sweep_matches(ModelParams{2, 1, 1, 0.1, 1, 2, 1}, "mid-at-alpha");
}

TEST(Tables, HighDebtRows) {
    expect_sweep_matches(kHigh, "high");
    expect_sweep_matches(kHighWide, "high-wide");
}

TEST(Tables, VeryHighDebtRows) {
    const ModelParams base = kVeryHighWide;
    const DerivedConstants k = derived_constants(base);
    const auto values = sweep_values(base, "M", 0.01, 2 * k.M_beta, 40);
    std::vector<double> all = values;
    all.push_back(k.M_alpha);
    all.push_back(k.M_beta);
    for (const TableRow& row : sweep(base, "M", all)) {
        EXPECT_TRUE(observed_row(row) == expected_row(row.params))
            << row.params.M << ": " << describe(observed_row(row));
    }
}

TEST(Tables, RangeLabelsFollowRegime) {
    const TableRow r = table_row(with_M(kHigh, 0.3));
    EXPECT_EQ(r.m_range, "M > M0(beta)");
    EXPECT_EQ(table_row(with_M(kLow, 0.2)).m_range, "M0(alpha) < M <= M_alpha");
}
