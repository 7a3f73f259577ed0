#include "framing/charts.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace framing::analysis {

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

std::string fmt(double v, const char* spec = "%.1f") {
    char buf[32];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

constexpr const char* kPalette[] = {"#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860"};

}  // namespace

std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& groups,
                          const std::vector<BarSeries>& series) {
    const double width = 640, height = 400, left = 60, right = 20, top = 50, bottom = 70;
    const double plot_w = width - left - right, plot_h = height - top - bottom;
    const std::size_t n_groups = std::max<std::size_t>(1, groups.size());
    const std::size_t n_series = std::max<std::size_t>(1, series.size());
    const double group_w = plot_w / static_cast<double>(n_groups);
    const double bar_w = group_w * 0.8 / static_cast<double>(n_series);

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width, "%.0f") << "\" height=\""
        << fmt(height, "%.0f") << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << fmt(width / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
        << "</text>\n";
    for (int tick = 0; tick <= 5; ++tick) {
        const double v = tick / 5.0;
        const double y = top + plot_h * (1.0 - v);
        svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(left + plot_w) << "\" y2=\""
            << fmt(y) << "\" stroke=\"#dddddd\"/>\n";
        svg << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">" << fmt(v, "%.1f")
            << "</text>\n";
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const double gx = left + group_w * static_cast<double>(g) + group_w * 0.1;
        for (std::size_t s = 0; s < series.size(); ++s) {
            if (g >= series[s].values.size() || !series[s].values[g]) continue;
            const double v = std::clamp(*series[s].values[g], 0.0, 1.0);
            const double h = plot_h * v;
            const double x = gx + bar_w * static_cast<double>(s);
            svg << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(top + plot_h - h) << "\" width=\"" << fmt(bar_w)
                << "\" height=\"" << fmt(h) << "\" fill=\"" << kPalette[s % 6] << "\"/>\n";
            svg << "<text x=\"" << fmt(x + bar_w / 2) << "\" y=\"" << fmt(top + plot_h - h - 4)
                << "\" text-anchor=\"middle\" font-size=\"10\">" << fmt(v, "%.2f") << "</text>\n";
        }
        svg << "<text x=\"" << fmt(left + group_w * (static_cast<double>(g) + 0.5)) << "\" y=\""
            << fmt(top + plot_h + 18) << "\" text-anchor=\"middle\">" << escape(groups[g]) << "</text>\n";
    }
    svg << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(top + plot_h) << "\" x2=\"" << fmt(left + plot_w)
        << "\" y2=\"" << fmt(top + plot_h) << "\" stroke=\"black\"/>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double x = left + 140.0 * static_cast<double>(s);
        const double y = height - 22;
        svg << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y - 10) << "\" width=\"12\" height=\"12\" fill=\""
            << kPalette[s % 6] << "\"/>\n";
        svg << "<text x=\"" << fmt(x + 16) << "\" y=\"" << fmt(y) << "\">" << escape(series[s].name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace framing::analysis
