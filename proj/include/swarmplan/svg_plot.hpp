#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace swarmplan {

class PlotError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> spread;  ///< optional; draws a band y +/- spread
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
};

/// Linear map from data values to pixels.
struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    double px_lo = 0.0;
    double px_hi = 1.0;

    double to_px(double v) const { return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo); }
    double from_px(double p) const { return lo + (p - px_lo) / (px_hi - px_lo) * (hi - lo); }
};

struct ChartLayout {
    Axis x;
    Axis y;
};

/// Data ranges (bands included) mapped into the plot area. Throws PlotError
/// when there is nothing to draw or the series are malformed.
ChartLayout layout_line_chart(const LineChart& chart);

/// Each band is a <polygon class="band"> whose first half traces y + spread
/// left to right and whose second half traces y - spread right to left.
std::string render_line_chart(const LineChart& chart);

struct Heatmap {
    std::string title;
    std::string row_label;
    std::string col_label;
    std::vector<std::string> row_names;
    std::vector<std::string> col_names;
    std::vector<std::vector<double>> values;  ///< values[row][col]
};

std::string render_heatmap(const Heatmap& map);

}  // namespace swarmplan
