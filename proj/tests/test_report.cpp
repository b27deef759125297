#include <gtest/gtest.h>

#include <functional>
#include <random>

#include "cases.hpp"
#include "llmad/report.hpp"

using namespace llmad;
using namespace cases;

TEST(ParseReport, ResponseFormatSkeletonParses) {
    for (auto v : kAllVariants) {
        SCOPED_TRACE(to_string(v));
        const auto raw = instantiate(skeleton_line(v));
        auto r = parse_report(raw, 400, v);
        EXPECT_FALSE(r.is_anomaly);
        EXPECT_TRUE(r.anomalies.empty());
        EXPECT_FALSE(r.anomaly_type.has_value());
        EXPECT_FALSE(r.alarm_level.has_value());
        EXPECT_EQ(r.brief_explanation.size(), step_names(v).size());
        EXPECT_TRUE(r.repairs.empty());
    }
}

TEST(ParseReport, TwentyMutations) {
    const auto all = mutations();
    ASSERT_GE(all.size(), 20u);
    for (const auto& c : all) EXPECT_EQ(run_mutation(c), "") << c.name;
}

TEST(ParseReport, FencedEqualsUnfenced) {
    const std::string base = base_report().dump(2);
    EXPECT_EQ(parse_report("```json\n" + base + "\n```", 400, TemplateVariant::Wsd),
              parse_report(base, 400, TemplateVariant::Wsd));
}

TEST(ParseReport, YahooSyntheticStepKeys) {
    const std::string good = R"({"briefExplanation": {"step1_local": "x", "step2_reasses": "y"},
        "is_anomaly": false, "anomalies": [], "reason_for_anomaly_type": "no", "anomaly_type": "no",
        "reason_for_alarm_level": "no", "alarm_level": "no"})";
    EXPECT_NO_THROW(parse_report(good, 10, TemplateVariant::YahooSynthetic));
    std::string corrected = good;
    replace_all(corrected, "step2_reasses", "step2_reassess");
    EXPECT_NO_THROW(parse_report(corrected, 10, TemplateVariant::YahooSynthetic));
    EXPECT_THROW(parse_report(good, 10, TemplateVariant::Kpi), ValidationError);
}

TEST(ParseReport, SerializeParseIdentityOnRandomReports) {
    std::mt19937_64 rng(2024);
    for (int t = 0; t < 100; ++t) {
        const auto v = kAllVariants[rng() % kAllVariants.size()];
        const std::size_t len = 1 + rng() % 400;
        const auto r = random_report(rng, v, len);
        const auto s = serialize_report(r);
        const auto back = parse_report(s, len, v);
        EXPECT_EQ(back, r) << s;
        EXPECT_TRUE(back.repairs.empty());
        EXPECT_EQ(serialize_report(back), s);
    }
}

TEST(MapIndices, OffsetAndDedup) {
    AnomalyReport r;
    r.anomalies = {1};
    EXPECT_EQ(map_indices(r, 400), (std::vector<std::size_t>{400}));
    r.anomalies = {5, 5, 6};
    EXPECT_EQ(map_indices(r, 800), (std::vector<std::size_t>{804, 805}));
    r.anomalies = {};
    EXPECT_TRUE(map_indices(r, 0).empty());
}

TEST(EnforceConstraints, WsdKeepsThreeLongestRuns) {
    AnomalyReport r;
    r.is_anomaly = true;
    // runs of length 1, 5, 3, 4 in model order
    r.anomalies = {40, 10, 11, 12, 13, 14, 30, 31, 32, 20, 21, 22, 23};
    auto out = enforce_constraints(r, TemplateVariant::Wsd);
    EXPECT_EQ(out.anomalies, (std::vector<std::int64_t>{10, 11, 12, 13, 14, 30, 31, 32, 20, 21, 22, 23}));
    EXPECT_EQ(out.repairs.size(), 1u);
    EXPECT_EQ(enforce_constraints(r, TemplateVariant::Kpi).anomalies, r.anomalies);

    r.anomalies = {1, 3, 5, 7};
    EXPECT_EQ(enforce_constraints(r, TemplateVariant::Wsd).anomalies, (std::vector<std::int64_t>{1, 3, 5}));
    r.anomalies = {1, 2, 9};
    EXPECT_TRUE(enforce_constraints(r, TemplateVariant::Wsd).repairs.empty());
}

TEST(IndexRuns, Basic) {
    EXPECT_EQ(index_runs({3, 1, 2, 7, 7, 9}),
              (std::vector<std::pair<std::int64_t, std::int64_t>>{{1, 3}, {7, 7}, {9, 9}}));
    EXPECT_TRUE(index_runs({}).empty());
}
