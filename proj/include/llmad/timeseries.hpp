#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "llmad/error.hpp"

namespace llmad {

using Label = std::uint8_t;

/// Univariate metric series sampled at a fixed interval.
struct TimeSeries {
    std::string id;
    std::vector<double> values;
    std::int64_t interval_seconds = 60;

    TimeSeries() = default;
    TimeSeries(std::string id_, std::vector<double> values_, std::int64_t interval = 60)
        : id(std::move(id_)), values(std::move(values_)), interval_seconds(interval) {
        if (values.empty()) throw InvalidArgument("time series '" + id + "' has no values");
        if (interval_seconds <= 0) throw InvalidArgument("interval_seconds must be positive");
    }

    std::size_t size() const noexcept { return values.size(); }
};

/// A series with one 0/1 anomaly label per point.
struct LabeledSeries {
    TimeSeries series;
    std::vector<Label> labels;

    LabeledSeries() = default;
    LabeledSeries(TimeSeries s, std::vector<Label> l) : series(std::move(s)), labels(std::move(l)) {
        if (labels.size() != series.size())
            throw InvalidArgument("label count does not match value count for '" + series.id + "'");
        for (Label y : labels)
            if (y > 1) throw InvalidArgument("labels must be 0 or 1");
    }

    const std::string& id() const noexcept { return series.id; }
    std::size_t size() const noexcept { return series.size(); }
    std::size_t anomaly_count() const noexcept {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label{1}));
    }
};

/// Contiguous slice of a source series; `start` is the zero-based global offset.
struct Window {
    std::string source_id;
    std::size_t start = 0;
    std::vector<double> values;
    std::optional<std::vector<Label>> labels;

    std::size_t size() const noexcept { return values.size(); }
    bool has_anomaly() const noexcept {
        return labels && std::find(labels->begin(), labels->end(), Label{1}) != labels->end();
    }
};

struct ScalingParams {
    double a = 1.0;     // upper-percentile scale
    double b = 0.0;     // shifted floor
    double beta = 0.0;
    double alpha = 0.95;
    std::int64_t scale_constant = 1000;
};

/// Integer rendering of a window that the model actually reads.
struct ScaledWindow {
    ScalingParams params;
    std::vector<std::int64_t> ints;

    std::size_t size() const noexcept { return ints.size(); }
};

// -----------------------------------------------------------------------------
// Numeric helpers

/// Quantile with linear interpolation between order statistics: the value at
/// fractional rank q*(n-1) of the sorted sample (numpy's default "linear").
inline double percentile(std::span<const double> values, double q) {
    if (values.empty()) throw InvalidArgument("percentile of empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("percentile level must lie in [0,1]");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return s[lo] + frac * (s[hi] - s[lo]);
}

/// Round half away from zero, saturating at the int64 range.
inline std::int64_t round_to_int(double x) {
    constexpr double lim = 9.2e18;
    if (std::isnan(x)) return 0;
    if (x >= lim) return std::numeric_limits<std::int64_t>::max();
    if (x <= -lim) return std::numeric_limits<std::int64_t>::min();
    return static_cast<std::int64_t>(std::round(x));
}

inline constexpr double kDegenerateScale = 1e-9;

// -----------------------------------------------------------------------------
// Splitting and windowing

struct TrainTestSplit {
    std::vector<LabeledSeries> train;
    std::vector<LabeledSeries> test;
    /// Global offset of each test part within its source series.
    std::vector<std::size_t> test_offsets;
};

/// Number of points that go to the test side: ceil(fraction * n).
inline std::size_t test_size(std::size_t n, double test_fraction) {
    // guard against 0.05*100 landing a hair above 5
    const double raw = test_fraction * static_cast<double>(n);
    return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

/// Per series, the final ceil(fraction*n) points form the test part.
inline TrainTestSplit split_train_test(const std::vector<LabeledSeries>& ds, double test_fraction) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw InvalidArgument("test fraction must lie strictly between 0 and 1");
    TrainTestSplit out;
    for (const auto& s : ds) {
        const std::size_t n = s.size();
        const std::size_t nt = test_size(n, test_fraction);
        if (nt == 0 || nt >= n)
            throw InvalidArgument("series '" + s.id() + "' (n=" + std::to_string(n) +
                                  ") is too short to split with fraction " +
                                  std::to_string(test_fraction));
        const std::size_t cut = n - nt;
        auto part = [&](std::size_t from, std::size_t to) {
            std::vector<double> v(s.series.values.begin() + from, s.series.values.begin() + to);
            std::vector<Label> l(s.labels.begin() + from, s.labels.begin() + to);
            return LabeledSeries(TimeSeries(s.id(), std::move(v), s.series.interval_seconds),
                                 std::move(l));
        };
        out.train.push_back(part(0, cut));
        out.test.push_back(part(cut, n));
        out.test_offsets.push_back(cut);
    }
    return out;
}

/// Windows at starts 0, stride, 2*stride, ... until one reaches the end of the
/// series; the last window may be shorter than window_len.
inline std::vector<Window> windowize(const std::string& source_id, std::span<const double> values,
                                     std::span<const Label> labels, std::size_t window_len,
                                     std::size_t stride, std::size_t base_offset = 0) {
    if (window_len == 0) throw InvalidArgument("window_len must be at least 1");
    if (stride == 0) throw InvalidArgument("stride must be at least 1");
    if (!labels.empty() && labels.size() != values.size())
        throw InvalidArgument("labels do not align with values");
    std::vector<Window> out;
    const std::size_t n = values.size();
    for (std::size_t start = 0; start < n; start += stride) {
        const std::size_t end = std::min(start + window_len, n);
        Window w;
        w.source_id = source_id;
        w.start = base_offset + start;
        w.values.assign(values.begin() + start, values.begin() + end);
        if (!labels.empty()) w.labels.emplace(labels.begin() + start, labels.begin() + end);
        out.push_back(std::move(w));
        if (end == n) break;
    }
    return out;
}

inline std::vector<Window> windowize(const LabeledSeries& s, std::size_t window_len,
                                     std::size_t stride) {
    return windowize(s.id(), s.series.values, s.labels, window_len, stride);
}

inline std::vector<Window> windowize(const LabeledSeries& s, std::size_t window_len) {
    return windowize(s, window_len, window_len);
}

// -----------------------------------------------------------------------------
// Rescaling

/// Computes a, b for one window:
///   a = alpha-level percentile of the window
///   b = p01 - beta * (p99 - p01)
/// When a falls below kDegenerateScale (constant or non-positive windows) the
/// scale collapses to a = 1, b = p01.
inline ScalingParams fit_scaling(std::span<const double> values, double alpha, double beta,
                                 std::int64_t scale_constant) {
    if (values.empty()) throw InvalidArgument("cannot rescale an empty window");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in (0,1]");
    if (!(beta >= 0.0)) throw InvalidArgument("beta must be non-negative");
    if (scale_constant <= 0) throw InvalidArgument("scale_constant must be positive");
    for (double v : values)
        if (!std::isfinite(v)) throw InvalidArgument("window contains a non-finite value");

    ScalingParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.scale_constant = scale_constant;
    const double p01 = percentile(values, 0.01);
    const double p99 = percentile(values, 0.99);
    p.a = percentile(values, alpha);
    p.b = p01 - beta * (p99 - p01);
    if (p.a < kDegenerateScale) {
        p.a = 1.0;
        p.b = p01;
    }
    return p;
}

inline std::int64_t apply_scaling(const ScalingParams& p, double x) {
    return round_to_int(static_cast<double>(p.scale_constant) * (x - p.b) / p.a);
}

inline ScaledWindow rescale(std::span<const double> values, double alpha = 0.95,
                            double beta = 0.0, std::int64_t scale_constant = 1000) {
    ScaledWindow sw;
    sw.params = fit_scaling(values, alpha, beta, scale_constant);
    sw.ints.reserve(values.size());
    for (double x : values) sw.ints.push_back(apply_scaling(sw.params, x));
    return sw;
}

inline ScaledWindow rescale(const Window& w, double alpha = 0.95, double beta = 0.0,
                            std::int64_t scale_constant = 1000) {
    return rescale(std::span<const double>(w.values), alpha, beta, scale_constant);
}

/// "Index Value" table, 1-based, single-space separated, no trailing newline.
inline std::string format_indexed(std::span<const std::int64_t> ints) {
    std::string out = "Index Value";
    for (std::size_t i = 0; i < ints.size(); ++i) {
        out += '\n';
        out += std::to_string(i + 1);
        out += ' ';
        out += std::to_string(ints[i]);
    }
    return out;
}

inline std::string format_indexed(const ScaledWindow& sw) { return format_indexed(sw.ints); }

/// Inverse of format_indexed; returns nullopt when `text` is not a well-formed table.
inline std::optional<std::vector<std::int64_t>> parse_indexed(std::string_view text) {
    constexpr std::string_view header = "Index Value";
    if (text.substr(0, header.size()) != header) return std::nullopt;
    std::vector<std::int64_t> out;
    std::size_t pos = header.size();
    while (pos < text.size() && text[pos] == '\n') {
        ++pos;
        const std::size_t eol = std::min(text.find('\n', pos), text.size());
        const std::string line(text.substr(pos, eol - pos));
        long long idx = 0, val = 0;
        char tail = 0;
        if (std::sscanf(line.c_str(), "%lld %lld%c", &idx, &val, &tail) != 2) break;
        if (idx != static_cast<long long>(out.size()) + 1) break;
        out.push_back(val);
        pos = eol;
    }
    if (out.empty()) return std::nullopt;
    return out;
}

} // namespace llmad
