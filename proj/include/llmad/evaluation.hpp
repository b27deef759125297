#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "llmad/dataset.hpp"
#include "llmad/error.hpp"
#include "llmad/taxonomy.hpp"
#include "llmad/timeseries.hpp"

namespace llmad {

/// Inclusive (start, end) pair.
using Segment = std::pair<std::size_t, std::size_t>;

struct MetricResult {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
};

/// Precision/recall/F1 from counts; 0/0 is taken as 0.
inline MetricResult metric_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    MetricResult m;
    m.true_positives = tp;
    m.false_positives = fp;
    m.false_negatives = fn;
    m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

struct DelayConfig {
    std::size_t k = 7;
};

/// Delay threshold per dataset: 7 for KPI and WSD, 3 for Yahoo.
inline DelayConfig default_delay(DatasetFormat f) {
    return DelayConfig{f == DatasetFormat::Yahoo ? std::size_t{3} : std::size_t{7}};
}

enum class AdjustMode { None, Point, Delayed };

struct Adjustment {
    AdjustMode mode = AdjustMode::Point;
    std::size_t k = 0; // only for Delayed

    static Adjustment none() { return {AdjustMode::None, 0}; }
    static Adjustment point() { return {AdjustMode::Point, 0}; }
    static Adjustment delayed(std::size_t k) { return {AdjustMode::Delayed, k}; }
};

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b, const char* op) {
    if (a != b)
        throw InvalidArgument(std::string(op) + ": prediction has " + std::to_string(a) + " points, truth has " +
                              std::to_string(b));
}

} // namespace detail

/// Maximal runs of 1s.
inline std::vector<Segment> segments(std::span<const Label> v) {
    std::vector<Segment> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i]) continue;
        if (!out.empty() && out.back().second + 1 == i)
            out.back().second = i;
        else
            out.emplace_back(i, i);
    }
    return out;
}

/// A truth segment with any detection is credited in full.
inline std::vector<Label> point_adjust(std::span<const Label> pred, std::span<const Label> truth) {
    detail::require_same_length(pred.size(), truth.size(), "point_adjust");
    std::vector<Label> out(pred.begin(), pred.end());
    for (auto [s, e] : segments(truth)) {
        const bool hit = std::any_of(pred.begin() + s, pred.begin() + e + 1, [](Label x) { return x != 0; });
        if (hit) std::fill(out.begin() + s, out.begin() + e + 1, Label{1});
    }
    return out;
}

/// A truth segment [s, e] is credited in full when its first detection f
/// satisfies f - s <= k, and is zeroed otherwise.
inline std::vector<Label> delayed_adjust(std::span<const Label> pred, std::span<const Label> truth, std::size_t k) {
    detail::require_same_length(pred.size(), truth.size(), "delayed_adjust");
    std::vector<Label> out(pred.begin(), pred.end());
    for (auto [s, e] : segments(truth)) {
        std::optional<std::size_t> first;
        for (std::size_t i = s; i <= e && !first; ++i)
            if (pred[i]) first = i;
        const Label fill = first && *first - s <= k ? 1 : 0;
        std::fill(out.begin() + s, out.begin() + e + 1, fill);
    }
    return out;
}

inline std::vector<Label> adjust(std::span<const Label> pred, std::span<const Label> truth, const Adjustment& a) {
    switch (a.mode) {
    case AdjustMode::None:
        detail::require_same_length(pred.size(), truth.size(), "adjust");
        return {pred.begin(), pred.end()};
    case AdjustMode::Point: return point_adjust(pred, truth);
    case AdjustMode::Delayed: return delayed_adjust(pred, truth, a.k);
    }
    return {};
}

/// Pointwise counts against `truth`.
inline MetricResult f1_from_vectors(std::span<const Label> pred, std::span<const Label> truth) {
    detail::require_same_length(pred.size(), truth.size(), "f1_from_vectors");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] && truth[i])
            ++tp;
        else if (pred[i])
            ++fp;
        else if (truth[i])
            ++fn;
    }
    return metric_from_counts(tp, fp, fn);
}

struct BestF1 {
    MetricResult metric;
    /// Score inputs: points with score >= threshold are predicted (+inf means none).
    double threshold = std::numeric_limits<double>::infinity();
    /// Ranked inputs: the first `cap` ranked points are predicted.
    std::size_t cap = 0;
    std::size_t operating_points = 0;
};

/// Sweeps thresholds over the distinct scores plus the empty prediction and
/// keeps the best F1 after adjustment. Ties keep the higher threshold.
inline BestF1 best_f1_scores(std::span<const double> scores, std::span<const Label> truth, const Adjustment& a) {
    if (scores.empty()) throw InvalidArgument("best_f1: empty input");
    detail::require_same_length(scores.size(), truth.size(), "best_f1");
    std::vector<double> thresholds(scores.begin(), scores.end());
    std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.insert(thresholds.begin(), std::numeric_limits<double>::infinity());

    BestF1 best;
    bool first = true;
    std::vector<Label> pred(scores.size());
    for (double t : thresholds) {
        for (std::size_t i = 0; i < scores.size(); ++i) pred[i] = scores[i] >= t ? 1 : 0;
        const MetricResult m = f1_from_vectors(adjust(pred, truth, a), truth);
        ++best.operating_points;
        if (first || m.f1 > best.metric.f1) {
            best.metric = m;
            best.threshold = t;
            first = false;
        }
    }
    return best;
}

/// Binary output whose flagged points come in a meaningful order: caps
/// c = 0..ranked.size() keep the first c ranked points. Ties keep the smaller cap.
inline BestF1 best_f1_ranked(std::span<const std::size_t> ranked, std::span<const Label> truth,
                             const Adjustment& a) {
    if (truth.empty()) throw InvalidArgument("best_f1: empty input");
    std::vector<Label> pred(truth.size(), 0);
    BestF1 best;
    for (std::size_t c = 0;; ++c) {
        const MetricResult m = f1_from_vectors(adjust(pred, truth, a), truth);
        ++best.operating_points;
        if (c == 0 || m.f1 > best.metric.f1) {
            best.metric = m;
            best.cap = c;
        }
        if (c == ranked.size()) break;
        if (ranked[c] >= truth.size())
            throw InvalidArgument("best_f1: ranked index " + std::to_string(ranked[c]) + " outside [0, " +
                                  std::to_string(truth.size()) + ")");
        pred[ranked[c]] = 1;
    }
    return best;
}

/// Sums counts over series (each taken at its own operating point).
inline MetricResult aggregate(std::span<const MetricResult> parts) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& m : parts) {
        tp += m.true_positives;
        fp += m.false_positives;
        fn += m.false_negatives;
    }
    return metric_from_counts(tp, fp, fn);
}

// -----------------------------------------------------------------------------
// Anomaly-type classification

struct TypeMetrics {
    double any_hit_accuracy = 0;
    MetricResult micro;
    std::size_t samples = 0;
};

/// One predicted type (or none) per sample against a set of accepted labels.
///   hit: prediction in the truth set (no prediction on an empty set also hits)
///   micro counts: a matching prediction is a TP, any other prediction an FP;
///   every truth label not equal to the prediction is an FN.
inline TypeMetrics type_metrics(std::span<const std::optional<AnomalyType>> predicted,
                                std::span<const std::set<AnomalyType>> truth) {
    if (predicted.size() != truth.size())
        throw InvalidArgument("type_metrics: " + std::to_string(predicted.size()) + " predictions but " +
                              std::to_string(truth.size()) + " truth sets");
    TypeMetrics out;
    out.samples = predicted.size();
    std::size_t hits = 0, tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const auto& p = predicted[i];
        const auto& t = truth[i];
        if (!p) {
            if (t.empty()) ++hits;
            fn += t.size();
            continue;
        }
        if (t.count(*p)) {
            ++hits;
            ++tp;
            fn += t.size() - 1;
        } else {
            ++fp;
            fn += t.size();
        }
    }
    out.any_hit_accuracy = out.samples ? static_cast<double>(hits) / static_cast<double>(out.samples) : 0.0;
    out.micro = metric_from_counts(tp, fp, fn);
    return out;
}

} // namespace llmad
