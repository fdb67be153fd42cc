#pragma once

#include <string>
#include <vector>

namespace fireflow {

/// One polyline on a plot.
struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool dashed = false;
};

struct SvgPlotSpec {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    bool log_x = false;
    bool log_y = false;
    int width = 720;
    int height = 480;
};

/// Hand-emitted SVG line plot: axes (decade ticks on log scales), one
/// polyline per series, and a legend. Plots are conveniences; the CSVs next
/// to them are the record. Non-positive values are skipped on log axes.
void write_svg_plot(const SvgPlotSpec& spec, const std::vector<SvgSeries>& series,
                    const std::string& path);

}  // namespace fireflow
