#include "fuseq/svg_chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace fuseq {

namespace {

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/// Round a raw span up to a 1/2/5 * 10^e tick spacing.
double nice_tick(double span) {
    if (span <= 0.0) return 1.0;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    if (norm <= 1.0) return mag;
    if (norm <= 2.0) return 2.0 * mag;
    if (norm <= 5.0) return 5.0 * mag;
    return 10.0 * mag;
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, int x_first,
                              const std::vector<ChartSeries>& series) {
    const int width = 760, height = 420;
    const int ml = 64, mr = 160, mt = 40, mb = 48;
    const double pw = width - ml - mr;
    const double ph = height - mt - mb;

    size_t max_len = 0;
    double y_min = 0.0, y_max = 0.0;
    bool any = false;
    for (const auto& s : series) {
        max_len = std::max(max_len, s.y.size());
        for (double v : s.y) {
            if (!any) {
                y_min = y_max = v;
                any = true;
            } else {
                y_min = std::min(y_min, v);
                y_max = std::max(y_max, v);
            }
        }
    }
    if (!any || max_len < 2) {
        y_min = 0.0;
        y_max = 1.0;
        max_len = std::max<size_t>(max_len, 2);
    }
    y_min = std::min(y_min, 0.0);
    if (y_max <= y_min) y_max = y_min + 1.0;

    const double x_lo = x_first;
    const double x_hi = x_first + static_cast<double>(max_len) - 1.0;
    const double x_tick = nice_tick(x_hi - x_lo);
    const double y_tick = nice_tick(y_max - y_min);
    // Expand the y range to whole ticks for clean labels.
    y_min = std::floor(y_min / y_tick) * y_tick;
    y_max = std::ceil(y_max / y_tick) * y_tick;

    auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto py = [&](double y) { return mt + (y_max - y) / (y_max - y_min) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\""
       << " font-size=\"15\">" << title << "</text>\n";

    // grid + ticks
    os << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (double x = x_lo; x <= x_hi + 1e-9; x += x_tick) {
        os << "<line x1=\"" << fmt(px(x)) << "\" y1=\"" << mt << "\" x2=\"" << fmt(px(x))
           << "\" y2=\"" << mt + ph << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << fmt(px(x)) << "\" y=\"" << mt + ph + 16
           << "\" text-anchor=\"middle\">" << fmt(x) << "</text>\n";
    }
    for (double y = y_min; y <= y_max + 1e-12; y += y_tick) {
        os << "<line x1=\"" << ml << "\" y1=\"" << fmt(py(y)) << "\" x2=\"" << ml + pw
           << "\" y2=\"" << fmt(py(y)) << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << ml - 6 << "\" y=\"" << fmt(py(y) + 4)
           << "\" text-anchor=\"end\">" << fmt(y) << "</text>\n";
    }
    os << "</g>\n";

    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
       << mt + ph << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
       << mt + ph / 2 << ")\">" << y_label << "</text>\n";

    for (const auto& s : series) {
        if (s.y.empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\" points=\"";
        for (size_t i = 0; i < s.y.size(); ++i) {
            if (i) os << " ";
            os << fmt(px(x_first + static_cast<double>(i))) << "," << fmt(py(s.y[i]));
        }
        os << "\"/>\n";
    }

    // legend
    int ly = mt + 8;
    for (const auto& s : series) {
        os << "<line x1=\"" << ml + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 34
           << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << ml + pw + 40 << "\" y=\"" << ly + 4
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
        ly += 18;
    }

    os << "</svg>\n";
    return os.str();
}

}  // namespace fuseq
