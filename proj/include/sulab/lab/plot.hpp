#pragma once

// Static SVG 1.1 line charts: solid polyline for each series mean, dashed
// polyline of the same colour for mean + std, ticks, axis labels, legend.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sulab/errors.hpp"
#include "sulab/lab/traces.hpp"

namespace sulab::lab {

struct PlotStyle {
    std::string title;
    std::string x_label = "t";
    std::string y_label = "value";
    int width = 800;
    int height = 500;
    std::size_t max_points = 2000;
    bool show_std = true;
};

namespace detail {

inline std::string fmt(double v, int decimals = 2) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    std::string s = buf;
    if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
    return s;
}

inline std::string tick_label(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

inline std::string xml_escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
            case '&': o += "&amp;"; break;
            case '<': o += "&lt;"; break;
            case '>': o += "&gt;"; break;
            case '"': o += "&quot;"; break;
            default: o += c;
        }
    }
    return o;
}

// Indices 0, s, 2s, ... with stride s = ceil(n / max_points).
inline std::vector<std::size_t> downsample(std::size_t n, std::size_t max_points) {
    const std::size_t stride = std::max<std::size_t>(1, (n + max_points - 1) / max_points);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; i += stride) idx.push_back(i);
    return idx;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace detail

inline void write_svg(std::ostream& out, const std::vector<AggregateTrace>& traces, const PlotStyle& style) {
    if (traces.empty()) throw DomainError("nothing to plot");
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& t : traces)
        for (std::size_t i = 0; i < t.size(); ++i) {
            x0 = std::min(x0, t.x[i]);
            x1 = std::max(x1, t.x[i]);
            y0 = std::min(y0, t.mean[i]);
            y1 = std::max(y1, style.show_std ? t.mean[i] + t.std[i] : t.mean[i]);
        }
    if (!(x0 <= x1)) throw DomainError("nothing to plot");
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double ml = 70, mr = 170, mt = 40, mb = 55;
    const double pw = style.width - ml - mr, ph = style.height - mt - mb;
    auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << style.width << "\" height=\""
        << style.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!style.title.empty())
        out << "<text x=\"" << detail::fmt(ml + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
            << detail::xml_escape(style.title) << "</text>\n";
    out << "<rect x=\"" << detail::fmt(ml) << "\" y=\"" << detail::fmt(mt) << "\" width=\"" << detail::fmt(pw)
        << "\" height=\"" << detail::fmt(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = x0 + (x1 - x0) * k / 5.0, yv = y0 + (y1 - y0) * k / 5.0;
        out << "<line x1=\"" << detail::fmt(px(xv)) << "\" y1=\"" << detail::fmt(mt + ph) << "\" x2=\""
            << detail::fmt(px(xv)) << "\" y2=\"" << detail::fmt(mt + ph + 5) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << detail::fmt(px(xv)) << "\" y=\"" << detail::fmt(mt + ph + 18)
            << "\" text-anchor=\"middle\">" << detail::tick_label(xv) << "</text>\n"
            << "<line x1=\"" << detail::fmt(ml - 5) << "\" y1=\"" << detail::fmt(py(yv)) << "\" x2=\""
            << detail::fmt(ml) << "\" y2=\"" << detail::fmt(py(yv)) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << detail::fmt(ml - 8) << "\" y=\"" << detail::fmt(py(yv) + 4)
            << "\" text-anchor=\"end\">" << detail::tick_label(yv) << "</text>\n";
    }
    out << "<text x=\"" << detail::fmt(ml + pw / 2) << "\" y=\"" << detail::fmt(style.height - 12.0)
        << "\" text-anchor=\"middle\">" << detail::xml_escape(style.x_label) << "</text>\n"
        << "<text x=\"16\" y=\"" << detail::fmt(mt + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
        << detail::fmt(mt + ph / 2) << ")\">" << detail::xml_escape(style.y_label) << "</text>\n";

    for (std::size_t s = 0; s < traces.size(); ++s) {
        const auto& t = traces[s];
        const char* color = detail::kPalette[s % std::size(detail::kPalette)];
        const auto idx = detail::downsample(t.size(), style.max_points);
        auto poly = [&](bool upper, const char* dash) {
            out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"" << dash
                << " points=\"";
            for (std::size_t k = 0; k < idx.size(); ++k) {
                const auto i = idx[k];
                const double y = upper ? t.mean[i] + t.std[i] : t.mean[i];
                out << (k ? " " : "") << detail::fmt(px(t.x[i])) << ',' << detail::fmt(py(y));
            }
            out << "\"/>\n";
        };
        poly(false, "");
        if (style.show_std) poly(true, " stroke-dasharray=\"4 3\"");
        const double ly = mt + 10 + 18.0 * static_cast<double>(s);
        out << "<line x1=\"" << detail::fmt(ml + pw + 12) << "\" y1=\"" << detail::fmt(ly) << "\" x2=\""
            << detail::fmt(ml + pw + 36) << "\" y2=\"" << detail::fmt(ly) << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n"
            << "<text x=\"" << detail::fmt(ml + pw + 42) << "\" y=\"" << detail::fmt(ly + 4) << "\">"
            << detail::xml_escape(t.series) << "</text>\n";
    }
    if (style.show_std) {
        const double ly = mt + 10 + 18.0 * static_cast<double>(traces.size());
        out << "<line x1=\"" << detail::fmt(ml + pw + 12) << "\" y1=\"" << detail::fmt(ly) << "\" x2=\""
            << detail::fmt(ml + pw + 36) << "\" y2=\"" << detail::fmt(ly)
            << "\" stroke=\"black\" stroke-dasharray=\"4 3\"/>\n"
            << "<text x=\"" << detail::fmt(ml + pw + 42) << "\" y=\"" << detail::fmt(ly + 4)
            << "\">mean + std</text>\n";
    }
    out << "</svg>\n";
}

inline void render_plot(const std::vector<AggregateTrace>& traces, const PlotStyle& style, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_svg(out, traces, style);
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace sulab::lab
