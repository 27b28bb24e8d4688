#include "reserve_control/report.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rctl;
using namespace testing_support;

TEST(Report, NonFiniteNumbersBecomeStrings) {
    EXPECT_EQ(num(kUnreached), Json("inf"));
    EXPECT_EQ(num(-kUnreached), Json("-inf"));
    EXPECT_EQ(num(std::nan("")), Json("nan"));
    EXPECT_EQ(read_num(Json("inf")), kUnreached);
    EXPECT_EQ(read_num(Json(0.25)), 0.25);
    EXPECT_THROW(read_num(Json("oops")), ConfigError);
    EXPECT_EQ(display(1.23456789).get<double>(), 1.23457);
}

TEST(Report, ValueRoundTripsExactlyThroughText) {
    for (const auto& combo : all_combos()) {
        const PiecewiseValue v = build_value(combo.params);
        const std::string text = to_json(v).dump();
        const PiecewiseValue back = value_from_json(Json::parse(text));
        EXPECT_EQ(back.x1, v.x1) << combo.label;
        ASSERT_EQ(back.segments.size(), v.segments.size()) << combo.label;
        for (int i = 0; i <= 100; ++i) {
            const double x = (v.x1 + 5.0) * i / 100.0;
            for (int order = 0; order <= 2; ++order)
                EXPECT_EQ(eval_value(back, x, order), eval_value(v, x, order)) << combo.label;
            EXPECT_EQ(optimal_risk(back, x), optimal_risk(v, x)) << combo.label;
        }
    }
}

TEST(Report, ParamsFromJson) {
    const Json good = to_json(with_M(kLow, 2.4));
    const ModelParams p = params_from_json(good);
    EXPECT_EQ(p.M, 2.4);
    Json missing = good;
    missing.erase("gamma");
    EXPECT_THROW(params_from_json(missing), ConfigError);
    Json wrong = good;
    wrong["beta"] = "two";
    EXPECT_THROW(params_from_json(wrong), ConfigError);
    Json invalid = good;
    invalid["sigma"] = -1.0;
    EXPECT_THROW(params_from_json(invalid), ParamError);
}

TEST(Report, SolveReportLayout) {
    const Json j = solve_report(build_value(with_M(kLow, 0.2)), 50);
    EXPECT_EQ(j["command"], "solve");
    EXPECT_EQ(j["breakpoints"]["x_alpha"], "inf");
    EXPECT_EQ(j["regime"]["m_subcase"], "AlphaThreshold");
    EXPECT_EQ(j["grid"].size(), 51u);
    const std::string csv = solve_csv(build_value(with_M(kLow, 0.2)), 10);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "x,V,dV,a,c");
}

TEST(Report, VerifyReportListsFailures) {
    PiecewiseValue v = build_value(with_M(kLow, 2.4));
    perturb_segment(v, 1, 1e-6);
    const Json j = verify_report(run_verification(v));
    EXPECT_FALSE(j["passed"].get<bool>());
    bool named = false;
    for (const auto& f : j["failed"]) named = named || f == "smooth fit at x_alpha";
    EXPECT_TRUE(named) << j["failed"].dump();
    EXPECT_THROW(perturb_segment(v, 9, 1e-6), ConfigError);
}

TEST(Report, SweepCsvColumns) {
    const auto rows = sweep(kLow, "M", {0.02, 2.4});
    const std::string csv = sweep_csv(rows, "M");
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "param,value,debt_case,m_subcase,x_alpha,x_beta,x1,x_alpha_class,x_beta_class,"
              "x1_class,alpha_attained,beta_attained,x1_first_max");
    EXPECT_NE(csv.find("M,0.02,LowDebt,AlphaImmediate,inf,inf,0,inf,inf,0,yes,no,yes"),
              std::string::npos)
        << csv;
    const Json j = sweep_report(rows, "M");
    EXPECT_EQ(j["rows"][1]["x_beta_class"], "positive");
}
