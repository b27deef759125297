#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "llmad/error.hpp"
#include "llmad/prompt.hpp"
#include "llmad/taxonomy.hpp"

namespace llmad {

/// Structured model output for one window. Indices are 1-based window positions.
struct AnomalyReport {
    std::vector<std::pair<std::string, std::string>> brief_explanation;
    bool is_anomaly = false;
    std::vector<std::int64_t> anomalies;
    std::optional<AnomalyType> anomaly_type;
    std::optional<AlarmLevel> alarm_level;
    std::string reason_for_anomaly_type = "no";
    std::string reason_for_alarm_level = "no";

    /// Normalizations applied while parsing; not part of report identity.
    std::vector<std::string> repairs;

    bool operator==(const AnomalyReport& o) const {
        return brief_explanation == o.brief_explanation && is_anomaly == o.is_anomaly &&
               anomalies == o.anomalies && anomaly_type == o.anomaly_type && alarm_level == o.alarm_level &&
               reason_for_anomaly_type == o.reason_for_anomaly_type &&
               reason_for_alarm_level == o.reason_for_alarm_level;
    }
};

inline std::string type_or_no(const std::optional<AnomalyType>& t) {
    return t ? std::string(to_string(*t)) : std::string(kNone);
}

inline std::string level_or_no(const std::optional<AlarmLevel>& a) {
    return a ? std::string(to_string(*a)) : std::string(kNone);
}

inline nlohmann::ordered_json to_json(const AnomalyReport& r) {
    nlohmann::ordered_json steps = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.brief_explanation) steps[k] = v;
    nlohmann::ordered_json j;
    j["briefExplanation"] = std::move(steps);
    j["is_anomaly"] = r.is_anomaly;
    j["anomalies"] = r.anomalies;
    j["reason_for_anomaly_type"] = r.reason_for_anomaly_type;
    j["anomaly_type"] = type_or_no(r.anomaly_type);
    j["reason_for_alarm_level"] = r.reason_for_alarm_level;
    j["alarm_level"] = level_or_no(r.alarm_level);
    return j;
}

/// Compact JSON in the field order of the response format.
inline std::string serialize_report(const AnomalyReport& r) { return to_json(r).dump(); }

namespace detail {

inline std::string excerpt(std::string_view raw, std::size_t max = 200) {
    if (raw.size() <= max) return std::string(raw);
    return std::string(raw.substr(0, max)) + "...";
}

/// Removes ``` fences (with an optional language tag) and any prose around the
/// outermost JSON object.
inline std::string extract_json_object(std::string_view raw) {
    std::string_view s = raw;
    if (auto open = s.find("```"); open != std::string_view::npos) {
        auto body = s.substr(open + 3);
        auto eol = body.find('\n');
        // language tag such as ```json
        if (eol != std::string_view::npos && body.substr(0, eol).find('{') == std::string_view::npos)
            body = body.substr(eol + 1);
        if (auto close = body.find("```"); close != std::string_view::npos) body = body.substr(0, close);
        s = body;
    }
    const auto first = s.find('{');
    const auto last = s.rfind('}');
    if (first == std::string_view::npos || last == std::string_view::npos || last < first)
        throw ParseError("no JSON object in model output", excerpt(raw));
    return std::string(s.substr(first, last - first + 1));
}

inline const nlohmann::ordered_json& require(const nlohmann::ordered_json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw ValidationError(std::string("missing field '") + field + "'", field);
    return *it;
}

inline std::string require_string(const nlohmann::ordered_json& j, const char* field) {
    const auto& v = require(j, field);
    if (!v.is_string()) throw ValidationError(std::string("field '") + field + "' must be a string", field);
    return v.get<std::string>();
}

} // namespace detail

/// Strict parse of one model completion against the variant's response format.
///
/// Accepted normalizations: code fences and surrounding prose are stripped; a
/// report that says is_anomaly=false but lists anomalies, a type or a level is
/// reset to "no anomaly"; is_anomaly=true with no indices becomes false.
/// Every such repair is listed in `repairs`.
inline AnomalyReport parse_report(std::string_view raw, std::size_t window_len, TemplateVariant variant) {
    const std::string text = detail::extract_json_object(raw);
    nlohmann::ordered_json j;
    try {
        j = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), detail::excerpt(raw));
    }
    if (!j.is_object()) throw ValidationError("report must be a JSON object", "root");

    AnomalyReport r;

    const auto& steps = detail::require(j, "briefExplanation");
    if (!steps.is_object()) throw ValidationError("briefExplanation must be an object", "briefExplanation");
    for (const auto& name : step_names(variant)) {
        bool present = steps.contains(name);
        if (!present && name == "step2_reasses") present = steps.contains("step2_reassess");
        if (!present) throw ValidationError("briefExplanation lacks '" + name + "'", "briefExplanation." + name);
    }
    for (const auto& [k, v] : steps.items()) {
        if (!v.is_string())
            throw ValidationError("briefExplanation." + k + " must be a string", "briefExplanation." + k);
        r.brief_explanation.emplace_back(k, v.get<std::string>());
    }

    const auto& flag = detail::require(j, "is_anomaly");
    if (!flag.is_boolean()) throw ValidationError("is_anomaly must be a boolean", "is_anomaly");
    r.is_anomaly = flag.get<bool>();

    const auto& idx = detail::require(j, "anomalies");
    if (!idx.is_array()) throw ValidationError("anomalies must be an array", "anomalies");
    for (const auto& v : idx) {
        if (!v.is_number_integer()) throw ValidationError("anomaly indices must be integers", "anomalies");
        const auto i = v.get<std::int64_t>();
        if (i < 1 || i > static_cast<std::int64_t>(window_len))
            throw ValidationError("anomaly index " + std::to_string(i) + " outside [1, " +
                                      std::to_string(window_len) + "]",
                                  std::to_string(i));
        r.anomalies.push_back(i);
    }

    r.reason_for_anomaly_type = detail::require_string(j, "reason_for_anomaly_type");
    const std::string type = detail::require_string(j, "anomaly_type");
    if (type != kNone) {
        r.anomaly_type = anomaly_type_from_string(type);
        if (!r.anomaly_type) throw ValidationError("unknown anomaly_type '" + type + "'", type);
    }
    r.reason_for_alarm_level = detail::require_string(j, "reason_for_alarm_level");
    const std::string level = detail::require_string(j, "alarm_level");
    if (level != kNone) {
        r.alarm_level = alarm_level_from_string(level);
        if (!r.alarm_level) throw ValidationError("unknown alarm_level '" + level + "'", level);
    }

    if (r.is_anomaly && r.anomalies.empty()) {
        r.is_anomaly = false;
        r.repairs.emplace_back("is_anomaly=true without indices; treated as no anomaly");
    }
    if (!r.is_anomaly && (!r.anomalies.empty() || r.anomaly_type || r.alarm_level)) {
        r.repairs.emplace_back("is_anomaly=false with anomaly details; details dropped");
        r.anomalies.clear();
        r.anomaly_type.reset();
        r.alarm_level.reset();
    }
    return r;
}

/// Window indices (1-based) to sorted, de-duplicated global indices.
inline std::vector<std::size_t> map_indices(const AnomalyReport& r, std::size_t window_start) {
    std::set<std::size_t> out;
    for (auto i : r.anomalies) out.insert(window_start + static_cast<std::size_t>(i) - 1);
    return {out.begin(), out.end()};
}

/// Maximal runs of consecutive indices, as (first, last) pairs in ascending order.
inline std::vector<std::pair<std::int64_t, std::int64_t>> index_runs(std::vector<std::int64_t> idx) {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    std::vector<std::pair<std::int64_t, std::int64_t>> runs;
    for (auto i : idx) {
        if (!runs.empty() && runs.back().second + 1 == i)
            runs.back().second = i;
        else
            runs.emplace_back(i, i);
    }
    return runs;
}

inline constexpr std::size_t kMaxWsdIntervals = 3;

/// Applies the WSD rule that a window holds at most three anomalous intervals:
/// keeps the three longest runs (earlier start wins ties). The surviving
/// indices stay in the model's original order.
inline AnomalyReport enforce_constraints(AnomalyReport r, TemplateVariant variant) {
    if (variant != TemplateVariant::Wsd) return r;
    auto runs = index_runs(r.anomalies);
    if (runs.size() <= kMaxWsdIntervals) return r;
    std::stable_sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) {
        return (a.second - a.first) > (b.second - b.first);
    });
    runs.resize(kMaxWsdIntervals);
    auto kept = [&](std::int64_t i) {
        return std::any_of(runs.begin(), runs.end(), [i](const auto& run) { return i >= run.first && i <= run.second; });
    };
    std::vector<std::int64_t> filtered;
    for (auto i : r.anomalies)
        if (kept(i)) filtered.push_back(i);
    r.repairs.push_back("dropped " + std::to_string(r.anomalies.size() - filtered.size()) +
                        " indices beyond the three-interval limit");
    r.anomalies = std::move(filtered);
    return r;
}

} // namespace llmad
