#pragma once

// Synthetic series shared by the pipeline, CLI and acceptance tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "llmad/timeseries.hpp"

namespace fixture {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mad(const std::vector<double>& v) {
    const double m = median(v);
    std::vector<double> d(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) d[i] = std::abs(v[i] - m);
    return median(d);
}

/// Sine baseline (amplitude 5, period ~63 points) plus N(0,1) noise, with
/// single-point spikes of `factor` times the noise MAD at `spikes`.
inline llmad::LabeledSeries spike_series(const std::string& id, std::size_t n, const std::vector<std::size_t>& spikes,
                                         std::uint64_t seed, double factor = 40.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<double> eps(n);
    for (auto& e : eps) e = noise(rng);
    const double amp = factor * mad(eps);
    std::vector<double> v(n);
    std::vector<llmad::Label> l(n, 0);
    for (std::size_t i = 0; i < n; ++i) v[i] = 100.0 + 5.0 * std::sin(0.1 * static_cast<double>(i)) + eps[i];
    for (auto s : spikes) {
        v[s] += amp;
        l[s] = 1;
    }
    return llmad::LabeledSeries(llmad::TimeSeries(id, std::move(v)), std::move(l));
}

inline std::filesystem::path temp_dir(const std::string& tag) {
    auto p = std::filesystem::temp_directory_path() /
             ("llmad_" + tag + "_" + std::to_string(std::random_device{}()) + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(p);
    return p;
}

} // namespace fixture
