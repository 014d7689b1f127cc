#pragma once

#include <string>
#include <vector>

namespace fuseq {

/// One polyline on a chart; y[i] is plotted at x = x_first + i.
struct ChartSeries {
    std::string label;
    std::string color;
    std::vector<double> y;
};

/// Renders a static SVG line chart (grid, axes, ticks, legend). Output is
/// a pure function of the inputs, so emitted files are byte-stable.
std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label, int x_first,
                              const std::vector<ChartSeries>& series);

}  // namespace fuseq
