#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "llmad/error.hpp"

namespace llmad {

enum class DistanceMethod { Exact, Fast };

struct DistanceResult {
    double distance = 0.0;
    DistanceMethod method = DistanceMethod::Exact;
};

using WarpPath = std::vector<std::pair<std::size_t, std::size_t>>;

struct FastDtwOptions {
    std::size_t radius = 1;
    /// Sequences no longer than this are aligned exactly.
    std::size_t base_size = 32;
};

namespace detail {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline void require_nonempty(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw InvalidArgument("DTW needs two non-empty sequences");
}

/// Per-row inclusive column range [lo, hi] of cells allowed in the DP.
struct Corridor {
    std::vector<std::size_t> lo;
    std::vector<std::size_t> hi;

    static Corridor full(std::size_t n, std::size_t m) {
        return {std::vector<std::size_t>(n, 0), std::vector<std::size_t>(n, m - 1)};
    }
};

/// DP restricted to a corridor, with path recovery. The corridor must contain
/// a monotone connected route from (0,0) to (n-1,m-1).
inline std::pair<double, WarpPath> constrained_dtw(std::span<const double> a, std::span<const double> b,
                                                   const Corridor& c) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    std::vector<std::size_t> offset(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) offset[i + 1] = offset[i] + (c.hi[i] - c.lo[i] + 1);
    std::vector<double> cost(offset[n], kInf);

    auto at = [&](std::size_t i, std::size_t j) -> double {
        if (j < c.lo[i] || j > c.hi[i]) return kInf;
        return cost[offset[i] + (j - c.lo[i])];
    };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = c.lo[i]; j <= c.hi[i]; ++j) {
            const double d = std::abs(a[i] - b[j]);
            double best;
            if (i == 0 && j == 0) {
                best = 0.0;
            } else {
                best = kInf;
                if (i > 0 && j > 0) best = std::min(best, at(i - 1, j - 1));
                if (i > 0) best = std::min(best, at(i - 1, j));
                if (j > 0) best = std::min(best, at(i, j - 1));
            }
            cost[offset[i] + (j - c.lo[i])] = best + d;
        }
    }

    WarpPath path;
    std::size_t i = n - 1, j = m - 1;
    path.emplace_back(i, j);
    while (i > 0 || j > 0) {
        if (i == 0) {
            --j;
        } else if (j == 0) {
            --i;
        } else {
            const double diag = at(i - 1, j - 1);
            const double up = at(i - 1, j);
            const double left = at(i, j - 1);
            if (diag <= up && diag <= left) {
                --i;
                --j;
            } else if (up <= left) {
                --i;
            } else {
                --j;
            }
        }
        path.emplace_back(i, j);
    }
    std::reverse(path.begin(), path.end());
    return {at(n - 1, m - 1), std::move(path)};
}

/// Halves resolution by averaging adjacent pairs; an odd tail element is kept.
inline std::vector<double> coarsen(std::span<const double> x) {
    std::vector<double> out;
    out.reserve((x.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < x.size(); i += 2) out.push_back(0.5 * (x[i] + x[i + 1]));
    if (x.size() % 2 == 1) out.push_back(x.back());
    return out;
}

/// Projects a coarse path onto the finer grid (each coarse cell covers a 2x2
/// block) and widens it by `radius` cells in every direction.
inline Corridor expand_path(const WarpPath& coarse, std::size_t n, std::size_t m, std::size_t radius) {
    Corridor c{std::vector<std::size_t>(n, m), std::vector<std::size_t>(n, 0)};
    for (const auto& [ci, cj] : coarse) {
        const std::size_t r0 = 2 * ci > radius ? 2 * ci - radius : 0;
        const std::size_t r1 = std::min(n - 1, 2 * ci + 1 + radius);
        const std::size_t c0 = 2 * cj > radius ? 2 * cj - radius : 0;
        const std::size_t c1 = std::min(m - 1, 2 * cj + 1 + radius);
        for (std::size_t r = r0; r <= r1; ++r) {
            c.lo[r] = std::min(c.lo[r], c0);
            c.hi[r] = std::max(c.hi[r], c1);
        }
    }
    return c;
}

inline std::pair<double, WarpPath> fastdtw_impl(std::span<const double> a, std::span<const double> b,
                                                const FastDtwOptions& opt) {
    const std::size_t n = a.size();
    const std::size_t m = b.size();
    const std::size_t base = std::max<std::size_t>(opt.base_size, 2);
    if (n <= base && m <= base) return constrained_dtw(a, b, Corridor::full(n, m));

    const auto ca = coarsen(a);
    const auto cb = coarsen(b);
    const auto coarse = fastdtw_impl(ca, cb, opt);
    return constrained_dtw(a, b, expand_path(coarse.second, n, m, opt.radius));
}

} // namespace detail

/// Full O(n*m) DTW with local cost |a_i - b_j| and the three-move recursion.
inline DistanceResult dtw_exact(std::span<const double> a, std::span<const double> b) {
    detail::require_nonempty(a, b);
    const std::size_t m = b.size();
    std::vector<double> prev(m), cur(m);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            const double d = std::abs(a[i] - b[j]);
            double best;
            if (i == 0 && j == 0)
                best = 0.0;
            else if (i == 0)
                best = cur[j - 1];
            else if (j == 0)
                best = prev[j];
            else
                best = std::min({prev[j - 1], prev[j], cur[j - 1]});
            cur[j] = best + d;
        }
        std::swap(prev, cur);
    }
    return {prev[m - 1], DistanceMethod::Exact};
}

/// Exact DTW plus one optimal warping path.
inline std::pair<double, WarpPath> dtw_exact_path(std::span<const double> a, std::span<const double> b) {
    detail::require_nonempty(a, b);
    return detail::constrained_dtw(a, b, detail::Corridor::full(a.size(), b.size()));
}

/// Multi-resolution FastDTW: coarsen until both sequences fit the base size,
/// align exactly, then project the path up one level at a time and re-solve
/// inside a corridor of width `radius` around it. Never below dtw_exact; equal
/// to it once the corridor spans the whole grid.
inline DistanceResult fastdtw(std::span<const double> a, std::span<const double> b,
                              const FastDtwOptions& opt) {
    detail::require_nonempty(a, b);
    return {detail::fastdtw_impl(a, b, opt).first, DistanceMethod::Fast};
}

inline DistanceResult fastdtw(std::span<const double> a, std::span<const double> b, std::size_t radius = 1) {
    return fastdtw(a, b, FastDtwOptions{radius, 32});
}

} // namespace llmad
