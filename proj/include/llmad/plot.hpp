#pragma once

#include <algorithm>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "llmad/error.hpp"
#include "llmad/evaluation.hpp"
#include "llmad/timeseries.hpp"

namespace llmad {

struct PlotOptions {
    int width = 1200;
    int height = 360;
    int margin = 40;
    std::string title;
};

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

} // namespace detail

/// Static SVG: the series as a polyline, each truth segment as a shaded
/// <rect class="truth">, each predicted point as a <circle class="pred">.
/// `truth` may be empty; `pred` holds positions into `values`.
inline std::string render_svg(std::span<const double> values, std::span<const Label> truth,
                              std::span<const std::size_t> pred, const PlotOptions& opt = {}) {
    if (values.empty()) throw InvalidArgument("cannot plot an empty series");
    if (!truth.empty() && truth.size() != values.size())
        throw InvalidArgument("truth labels do not align with the series");

    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it > lo ? *hi_it : lo + 1.0;
    const double plot_w = opt.width - 2.0 * opt.margin;
    const double plot_h = opt.height - 2.0 * opt.margin;
    const double step = values.size() > 1 ? plot_w / static_cast<double>(values.size() - 1) : 0.0;
    auto x = [&](std::size_t i) { return opt.margin + step * static_cast<double>(i); };
    auto y = [&](double v) { return opt.margin + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) + "\" height=\"" +
           std::to_string(opt.height) + "\" viewBox=\"0 0 " + std::to_string(opt.width) + " " +
           std::to_string(opt.height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty())
        svg += "<text x=\"" + std::to_string(opt.margin) + "\" y=\"" + std::to_string(opt.margin / 2 + 5) +
               "\" font-family=\"sans-serif\" font-size=\"14\">" + detail::xml_escape(opt.title) + "</text>\n";

    for (auto [s, e] : segments(truth)) {
        const double x0 = x(s) - step / 2;
        const double w = std::max(step * static_cast<double>(e - s + 1), 2.0);
        svg += "<rect class=\"truth\" x=\"" + detail::fmt(x0) + "\" y=\"" + std::to_string(opt.margin) +
               "\" width=\"" + detail::fmt(w) + "\" height=\"" + detail::fmt(plot_h) +
               "\" fill=\"#f4a6a6\" fill-opacity=\"0.5\"/>\n";
    }

    svg += "<polyline class=\"series\" fill=\"none\" stroke=\"#1f5fa8\" stroke-width=\"1\" points=\"";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) svg += ' ';
        svg += detail::fmt(x(i)) + "," + detail::fmt(y(values[i]));
    }
    svg += "\"/>\n";

    for (auto i : pred) {
        if (i >= values.size())
            throw InvalidArgument("predicted index " + std::to_string(i) + " outside the series");
        svg += "<circle class=\"pred\" cx=\"" + detail::fmt(x(i)) + "\" cy=\"" + detail::fmt(y(values[i])) +
               "\" r=\"3\" fill=\"#d62728\"/>\n";
    }
    svg += "</svg>\n";
    return svg;
}

} // namespace llmad
