// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0

#include "plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dmpt::tools
{
namespace
{
constexpr double width = 720;
constexpr double height = 440;
constexpr double left = 80;
constexpr double right = 170;
constexpr double top = 40;
constexpr double bottom = 60;

const char* const palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2",
    "#17becf"};

std::string escape(const std::string& s)
{
    std::string out;
    for (char c : s)
    {
        switch (c)
        {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

std::string fmt(double v)
{
    std::ostringstream o;
    o.precision(4);
    o << v;
    return o.str();
}

}  // namespace

std::string render_svg(const Chart& chart)
{
    auto xf = [&](double x) { return chart.log_x ? std::log10(std::max(x, 1e-12)) : x; };
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0, y1 = -x0;
    for (const auto& [name, pts] : chart.series)
        for (auto [x, y] : pts)
        {
            x0 = std::min(x0, xf(x));
            x1 = std::max(x1, xf(x));
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!std::isfinite(x0))
    {
        x0 = 0;
        x1 = 1;
        y1 = 1;
    }
    if (x1 == x0)
        x1 = x0 + 1;
    if (y1 <= y0)
        y1 = y0 + 1;
    y1 *= 1.05;

    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double x) { return left + (xf(x) - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(chart.title) << "</text>\n"
      << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (int i = 0; i <= 5; ++i)
    {
        double yv = y0 + (y1 - y0) * i / 5, y = py(yv);
        o << "<line x1=\"" << left << "\" x2=\"" << left + pw << "\" y1=\"" << y << "\" y2=\"" << y
          << "\" stroke=\"#ddd\"/>\n"
          << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fmt(yv)
          << "</text>\n";
        double xv = x0 + (x1 - x0) * i / 5, x = left + (xv - x0) / (x1 - x0) * pw;
        o << "<text x=\"" << x << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
          << fmt(chart.log_x ? std::pow(10, xv) : xv) << "</text>\n";
    }
    o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 16 << "\" text-anchor=\"middle\">"
      << escape(chart.x_label) << "</text>\n"
      << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(chart.y_label) << "</text>\n";

    size_t k = 0;
    for (const auto& [name, raw] : chart.series)
    {
        auto pts = raw;
        std::sort(pts.begin(), pts.end());
        const char* color = palette[k % std::size(palette)];
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (auto [x, y] : pts)
            o << px(x) << ',' << py(y) << ' ';
        o << "\"/>\n";
        for (auto [x, y] : pts)
            o << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
        double ly = top + 14 + 18 * double(k);
        o << "<line x1=\"" << left + pw + 12 << "\" x2=\"" << left + pw + 32 << "\" y1=\"" << ly - 4
          << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly << "\">" << escape(name) << "</text>\n";
        ++k;
    }
    o << "</svg>\n";
    return o.str();
}

void write_svg(const std::string& path, const Chart& chart)
{
    std::ofstream f{path, std::ios::binary | std::ios::trunc};
    if (!f)
        throw std::runtime_error{"cannot open " + path};
    f << render_svg(chart);
    if (!f.flush())
        throw std::runtime_error{"cannot write " + path};
}

}  // namespace dmpt::tools
