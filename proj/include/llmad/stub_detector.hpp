#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "llmad/report.hpp"
#include "llmad/taxonomy.hpp"
#include "llmad/timeseries.hpp"

namespace llmad {

/// Points further than this many MADs from the window median are flagged.
inline constexpr double kStubMadFactor = 3.0;

/// Runs at least this long are level shifts rather than spikes or dips.
inline constexpr std::size_t kLevelShiftMinRun = 5;

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// FNV-1a; stable across platforms unlike std::hash.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// The query table is the last "Index Value" block in the prompt.
inline std::optional<std::vector<std::int64_t>> find_query_block(std::string_view prompt) {
    const auto at = prompt.rfind("Index Value");
    if (at == std::string_view::npos) return std::nullopt;
    return parse_indexed(prompt.substr(at));
}

} // namespace detail

/// Outcome of the median/MAD rule on one window, before it is phrased as a report.
struct StubVerdict {
    double median = 0;
    double mad = 0;
    /// 1-based indices, strongest deviation first (ties by position).
    std::vector<std::int64_t> flagged;
    std::optional<AnomalyType> type;
    std::optional<AlarmLevel> level;
};

/// Flags |v - median| > 3 * MAD and classifies the result:
///   dominant direction = side with the larger summed deviation;
///   a run of >= 5 points in that direction is a level shift (persistent when
///   it reaches the window end, transient otherwise); otherwise one run is a
///   single spike/dip and several runs are multiple spikes/dips.
/// Alarm level from the peak deviation in MADs: >= 50 urgent, >= 10 important.
inline StubVerdict stub_verdict(std::span<const std::int64_t> ints) {
    StubVerdict out;
    if (ints.empty()) return out;
    std::vector<double> v(ints.begin(), ints.end());
    out.median = detail::median_of(v);
    std::vector<double> dev(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) dev[i] = v[i] - out.median;
    std::vector<double> absdev(dev.size());
    std::transform(dev.begin(), dev.end(), absdev.begin(), [](double d) { return std::abs(d); });
    out.mad = detail::median_of(absdev);

    const double limit = kStubMadFactor * out.mad;
    std::vector<std::size_t> hit;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (absdev[i] > limit) hit.push_back(i);
    if (hit.empty()) return out;

    std::vector<std::size_t> order = hit;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return absdev[a] > absdev[b]; });
    for (auto i : order) out.flagged.push_back(static_cast<std::int64_t>(i) + 1);

    double up = 0, down = 0;
    for (auto i : hit) (dev[i] > 0 ? up : down) += absdev[i];
    const bool rising = up >= down;

    std::size_t runs = 0, longest = 0, longest_end = 0, cur = 0;
    for (std::size_t k = 0; k < hit.size(); ++k) {
        const std::size_t i = hit[k];
        if ((dev[i] > 0) != rising) {
            cur = 0;
            continue;
        }
        const bool continues = cur > 0 && hit[k - 1] + 1 == i && ((dev[hit[k - 1]] > 0) == rising);
        cur = continues ? cur + 1 : 1;
        if (cur == 1) ++runs;
        if (cur > longest) {
            longest = cur;
            longest_end = i;
        }
    }
    if (longest >= kLevelShiftMinRun) {
        const bool persistent = longest_end + 1 == v.size();
        out.type = rising ? (persistent ? AnomalyType::PersistentLevelShiftUp : AnomalyType::TransientLevelShiftUp)
                          : (persistent ? AnomalyType::PersistentLevelShiftDown : AnomalyType::TransientLevelShiftDown);
    } else if (runs <= 1) {
        out.type = rising ? AnomalyType::SingleSpike : AnomalyType::SingleDip;
    } else {
        out.type = rising ? AnomalyType::MultipleSpikes : AnomalyType::MultipleDips;
    }

    const double peak = absdev[order.front()];
    const double ratio = out.mad > 0 ? peak / out.mad : std::numeric_limits<double>::infinity();
    out.level = ratio >= 50 ? AlarmLevel::UrgentError : ratio >= 10 ? AlarmLevel::Important : AlarmLevel::Warning;
    return out;
}

/// Deterministic offline stand-in for a chat model. Reads the query table from
/// the prompt, applies stub_verdict and answers in the response format the
/// prompt asks for. The seed only varies the explanation wording.
inline std::string stub_detect(std::string_view prompt, std::uint64_t seed) {
    const bool two_step = prompt.find("\"step1_local\"") != std::string_view::npos;
    const std::vector<std::string> steps = two_step ? step_names(TemplateVariant::YahooSynthetic)
                                                    : step_names(TemplateVariant::Wsd);
    std::mt19937_64 rng(detail::fnv1a(prompt) ^ (seed * 0x9E3779B97F4A7C15ULL));
    auto pick = [&](std::initializer_list<const char*> xs) {
        return std::string(*(xs.begin() + static_cast<std::ptrdiff_t>(rng() % xs.size())));
    };

    AnomalyReport r;
    const auto query = detail::find_query_block(prompt);
    if (!query) {
        for (const auto& s : steps)
            r.brief_explanation.emplace_back(s, "The query Index/Value block could not be parsed; no assessment made.");
        return serialize_report(r);
    }

    const StubVerdict verdict = stub_verdict(*query);
    const std::string stats = "median " + std::to_string(verdict.median) + ", MAD " + std::to_string(verdict.mad);
    std::string local;
    if (verdict.flagged.empty()) {
        local = "No point deviates from the median by more than 3 MAD (" + stats + ").";
    } else {
        local = std::to_string(verdict.flagged.size()) + " point(s) deviate by more than 3 MAD (" + stats +
                "), strongest at index " + std::to_string(verdict.flagged.front()) + ".";
    }
    const std::string global = pick({"The overall level is stable across the window.",
                                     "The window keeps a steady baseline overall.",
                                     "No sustained drift is visible over the whole window."});
    const std::string reassess = verdict.flagged.empty()
                                     ? pick({"Nothing to confirm.", "No candidates remain after review."})
                                     : pick({"The flagged points remain outliers on re-check.",
                                             "Re-checking confirms the flagged deviations."});
    if (two_step) {
        r.brief_explanation = {{steps[0], local}, {steps[1], reassess}};
    } else {
        r.brief_explanation = {{steps[0], global}, {steps[1], local}, {steps[2], reassess}};
    }
    if (!verdict.flagged.empty()) {
        r.is_anomaly = true;
        r.anomalies = verdict.flagged;
        r.anomaly_type = verdict.type;
        r.alarm_level = verdict.level;
        r.reason_for_anomaly_type = "Pattern of the flagged run(s) matches " + type_or_no(verdict.type) + ".";
        r.reason_for_alarm_level = "Peak deviation relative to the MAD maps to " + level_or_no(verdict.level) + ".";
    }
    return serialize_report(r);
}

} // namespace llmad
