#pragma once

#include <string>
#include <utility>
#include <vector>

namespace atex {

/// One plotted series: a polyline or scatter of (x, y) points.
struct SvgSeries {
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f77b4";
    bool line = true;
    std::string label;
};

struct SvgPlotOptions {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    int width = 640;
    int height = 420;
};

void write_svg_plot(const std::string& path, const std::vector<SvgSeries>& series,
                    const SvgPlotOptions& options);

}  // namespace atex
