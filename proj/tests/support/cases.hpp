#pragma once

// Prompt and report fixtures shared by the unit tests and the acceptance run.

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "llmad/prompt.hpp"
#include "llmad/report.hpp"

namespace cases {

using json = nlohmann::ordered_json;

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::filesystem::path golden_path(llmad::TemplateVariant v) {
    return std::filesystem::path(LLMAD_GOLDEN_DIR) / (llmad::to_string(v) + ".prompt");
}

/// Two normal examples, one anomalous example with a labelled spike, and a
/// six-point query that includes a negative value.
inline llmad::PromptBundle render_fixture(const llmad::PromptTemplate& t) {
    using llmad::Label;
    std::vector<std::int64_t> n1{10, 11, 12, 11, 10}, n2{9, 10, 11, 10, 9}, a1{10, 11, 500, 11, 10};
    std::vector<Label> z(5, 0), spike{0, 0, 1, 0, 0};
    llmad::ScaledWindow q;
    q.ints = {12, 15, 11, 480, 13, -2};
    return llmad::render_prompt(t, {llmad::mark_anomalies(n1, z), llmad::mark_anomalies(n2, z)},
                                {llmad::mark_anomalies(a1, spike)}, q);
}

inline void replace_all(std::string& s, const std::string& from, const std::string& to) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size()))
        s.replace(pos, from.size(), to);
}

/// The schema sketch line following the "##Response Format" header.
inline std::string skeleton_line(llmad::TemplateVariant v) {
    const auto& body = llmad::builtin_template(v).body();
    const auto from = body.find('\n', body.find("##Response Format")) + 1;
    return body.substr(from, body.find('\n', from) - from);
}

// Minimal instantiation of the schema sketch: first alternative of every
// "x/y" choice, reason placeholders quoted, "(only one)" notes removed.
inline std::string instantiate(std::string s) {
    replace_all(s, "analysis reason", "\"analysis reason\"");
    replace_all(s, "false/true", "false");
    replace_all(s, "[]/[index1, index2, index3, ...]", "[]");
    replace_all(s, "\"no\"/\"reason for anomaly type\"", "\"no\"");
    replace_all(s, "\"no\"/\"classification of main anomaly\"", "\"no\"");
    replace_all(s, "\"no\"/\"reason for alarm level\"", "\"no\"");
    replace_all(s, "\"no\"/\"Urgent/Error\"/\"Important\"/\"Warning\"", "\"no\"");
    replace_all(s, ",(only one)", ",");
    replace_all(s, ", }", " }");
    return s;
}

inline json base_report() {
    return json::parse(R"({"briefExplanation": {"step1_global": "flat", "step2_local": "one spike",
        "step3_reassess": "confirmed"}, "is_anomaly": true, "anomalies": [4],
        "reason_for_anomaly_type": "isolated high point", "anomaly_type": "SingleSpike",
        "reason_for_alarm_level": "short", "alarm_level": "Warning"})");
}

enum class Outcome { Ok, Parse, Validation };

/// One malformed or unusual model answer, parsed as a KPI report of a
/// 400-point window. Parse cases expect the excerpt to be the first 200
/// bytes; Validation cases expect `subject`; Ok cases must satisfy `check`.
struct Mutation {
    std::string name;
    std::string raw;
    Outcome outcome;
    std::string subject;
    std::function<bool(const llmad::AnomalyReport&)> check;
};

inline std::string with(const std::function<void(json&)>& f) {
    json j = base_report();
    f(j);
    return j.dump();
}

inline std::vector<Mutation> mutations() {
    using llmad::AlarmLevel;
    using llmad::AnomalyReport;
    using llmad::AnomalyType;
    const std::string base = base_report().dump();
    auto same_as_base = [](const AnomalyReport& r) {
        return r.is_anomaly && r.anomalies == std::vector<std::int64_t>{4} && r.anomaly_type == AnomalyType::SingleSpike &&
               r.alarm_level == AlarmLevel::Warning;
    };
    return {
        {"missing briefExplanation", with([](json& j) { j.erase("briefExplanation"); }), Outcome::Validation,
         "briefExplanation", {}},
        {"missing is_anomaly", with([](json& j) { j.erase("is_anomaly"); }), Outcome::Validation, "is_anomaly", {}},
        {"missing anomalies", with([](json& j) { j.erase("anomalies"); }), Outcome::Validation, "anomalies", {}},
        {"missing anomaly_type", with([](json& j) { j.erase("anomaly_type"); }), Outcome::Validation,
         "anomaly_type", {}},
        {"missing alarm_level", with([](json& j) { j.erase("alarm_level"); }), Outcome::Validation, "alarm_level",
         {}},
        {"missing step", with([](json& j) { j["briefExplanation"].erase("step3_reassess"); }), Outcome::Validation,
         "briefExplanation.step3_reassess", {}},
        {"bad anomaly_type", with([](json& j) { j["anomaly_type"] = "BigSpike"; }), Outcome::Validation,
         "BigSpike", {}},
        {"bad alarm_level", with([](json& j) { j["alarm_level"] = "Critical"; }), Outcome::Validation, "Critical",
         {}},
        {"index 0", with([](json& j) { j["anomalies"] = {0}; }), Outcome::Validation, "0", {}},
        {"index past end", with([](json& j) { j["anomalies"] = {401}; }), Outcome::Validation, "401", {}},
        {"negative index", with([](json& j) { j["anomalies"] = {-3}; }), Outcome::Validation, "-3", {}},
        {"string index", with([](json& j) { j["anomalies"] = {"4"}; }), Outcome::Validation, "anomalies", {}},
        {"string flag", with([](json& j) { j["is_anomaly"] = "true"; }), Outcome::Validation, "is_anomaly", {}},
        {"fenced json", "```json\n" + base + "\n```", Outcome::Ok, "", same_as_base},
        {"fenced bare", "```\n" + base + "\n```", Outcome::Ok, "", same_as_base},
        {"prose around", "Here is my analysis:\n" + base + "\nHope this helps.", Outcome::Ok, "", same_as_base},
        {"truncated", base.substr(0, base.size() / 2) + "}", Outcome::Parse, "", {}},
        {"empty", "", Outcome::Parse, "", {}},
        {"false with details", with([](json& j) { j["is_anomaly"] = false; }), Outcome::Ok, "",
         [](const AnomalyReport& r) {
             return !r.is_anomaly && r.anomalies.empty() && !r.anomaly_type && !r.alarm_level &&
                    r.repairs.size() == 1;
         }},
        {"true without indices", with([](json& j) { j["anomalies"] = json::array(); }), Outcome::Ok, "",
         [](const AnomalyReport& r) { return !r.is_anomaly && !r.anomaly_type && !r.repairs.empty(); }},
        {"trailing comma", "{\"is_anomaly\": false,}", Outcome::Parse, "", {}},
    };
}

/// Empty string when the case behaves as expected, otherwise what went wrong.
inline std::string run_mutation(const Mutation& c) {
    try {
        const auto r = llmad::parse_report(c.raw, 400, llmad::TemplateVariant::Kpi);
        if (c.outcome != Outcome::Ok) return "parsed but should have failed";
        if (c.check && !c.check(r)) return "parsed to an unexpected report";
        return {};
    } catch (const llmad::ParseError& e) {
        if (c.outcome != Outcome::Parse) return std::string("unexpected ParseError: ") + e.what();
        if (e.excerpt() != c.raw.substr(0, 200)) return "excerpt mismatch";
        return {};
    } catch (const llmad::ValidationError& e) {
        if (c.outcome != Outcome::Validation) return std::string("unexpected ValidationError: ") + e.what();
        if (e.subject() != c.subject) return "subject '" + e.subject() + "' != '" + c.subject + "'";
        return {};
    }
}

/// A schema-valid report for `v` over a window of `len` points.
inline llmad::AnomalyReport random_report(std::mt19937_64& rng, llmad::TemplateVariant v, std::size_t len) {
    static const std::vector<std::string> texts{"", "plain", "quote \" inside", "line\nbreak", "tab\tand \\ slash",
                                                "unicode \xce\xb1\xce\xb2", "{\"looks\": \"like json\"}"};
    auto text = [&] { return texts[rng() % texts.size()] + std::to_string(rng() % 100); };
    llmad::AnomalyReport r;
    for (const auto& s : llmad::step_names(v)) r.brief_explanation.emplace_back(s, text());
    r.is_anomaly = rng() % 2;
    if (r.is_anomaly) {
        const std::size_t n = 1 + rng() % 6;
        for (std::size_t i = 0; i < n; ++i) r.anomalies.push_back(1 + static_cast<std::int64_t>(rng() % len));
        r.anomaly_type = llmad::kAllAnomalyTypes[rng() % llmad::kAllAnomalyTypes.size()];
        r.alarm_level = llmad::kAllAlarmLevels[rng() % llmad::kAllAlarmLevels.size()];
        r.reason_for_anomaly_type = text();
        r.reason_for_alarm_level = text();
    }
    return r;
}

} // namespace cases
