#include "swarmplan/svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace swarmplan {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

std::string label_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

void open_svg(std::ostringstream& o, double w, double h, const std::string& title) {
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(w) << "\" height=\"" << px(h)
      << "\" viewBox=\"0 0 " << px(w) << ' ' << px(h) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << px(w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
      << "</text>\n";
}

// Padded range; a flat range is widened so the axis stays invertible.
std::pair<double, double> padded(double lo, double hi, double pad_fraction) {
    if (hi - lo < 1e-12) {
        const double d = std::max(1e-6, std::abs(lo) * 0.1 + 0.5);
        return {lo - d, hi + d};
    }
    const double pad = (hi - lo) * pad_fraction;
    return {lo - pad, hi + pad};
}

}  // namespace

ChartLayout layout_line_chart(const LineChart& chart) {
    if (chart.series.empty()) throw PlotError("line chart has no series");
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const Series& s : chart.series) {
        if (s.x.empty()) throw PlotError("series '" + s.label + "' is empty");
        if (s.x.size() != s.y.size()) throw PlotError("series '" + s.label + "' has mismatched x and y lengths");
        if (!s.spread.empty() && s.spread.size() != s.y.size()) {
            throw PlotError("series '" + s.label + "' has a band of the wrong length");
        }
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            const double sp = s.spread.empty() ? 0.0 : s.spread[i];
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || !std::isfinite(sp)) {
                throw PlotError("series '" + s.label + "' contains non-finite values");
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i] - sp);
            ymax = std::max(ymax, s.y[i] + sp);
        }
    }
    const auto [x0, x1] = padded(xmin, xmax, 0.0);
    const auto [y0, y1] = padded(ymin, ymax, 0.05);
    ChartLayout l;
    l.x = {x0, x1, kLeft, kWidth - kRight};
    l.y = {y0, y1, kHeight - kBottom, kTop};
    return l;
}

std::string render_line_chart(const LineChart& chart) {
    const ChartLayout l = layout_line_chart(chart);
    std::ostringstream o;
    open_svg(o, kWidth, kHeight, chart.title);

    // axes with five ticks each
    o << "<g stroke=\"black\" fill=\"none\">\n"
      << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(kHeight - kBottom) << "\" x2=\"" << px(kWidth - kRight)
      << "\" y2=\"" << px(kHeight - kBottom) << "\"/>\n"
      << "<line x1=\"" << px(kLeft) << "\" y1=\"" << px(kTop) << "\" x2=\"" << px(kLeft) << "\" y2=\""
      << px(kHeight - kBottom) << "\"/>\n</g>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = l.x.lo + (l.x.hi - l.x.lo) * i / 4.0;
        const double yv = l.y.lo + (l.y.hi - l.y.lo) * i / 4.0;
        o << "<text x=\"" << px(l.x.to_px(xv)) << "\" y=\"" << px(kHeight - kBottom + 18)
          << "\" text-anchor=\"middle\">" << label_number(xv) << "</text>\n";
        o << "<text x=\"" << px(kLeft - 6) << "\" y=\"" << px(l.y.to_px(yv) + 4) << "\" text-anchor=\"end\">"
          << label_number(yv) << "</text>\n";
    }
    o << "<text x=\"" << px((kLeft + kWidth - kRight) / 2) << "\" y=\"" << px(kHeight - 18)
      << "\" text-anchor=\"middle\">" << escape(chart.x_label) << "</text>\n";
    o << "<text x=\"18\" y=\"" << px((kTop + kHeight - kBottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << px((kTop + kHeight - kBottom) / 2) << ")\">" << escape(chart.y_label) << "</text>\n";

    for (std::size_t k = 0; k < chart.series.size(); ++k) {
        const Series& s = chart.series[k];
        const char* color = kPalette[k % kPalette.size()];
        if (!s.spread.empty()) {
            o << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                o << px(l.x.to_px(s.x[i])) << ',' << px(l.y.to_px(s.y[i] + s.spread[i])) << ' ';
            }
            for (std::size_t i = s.x.size(); i-- > 0;) {
                o << px(l.x.to_px(s.x[i])) << ',' << px(l.y.to_px(s.y[i] - s.spread[i])) << (i ? " " : "");
            }
            o << "\"/>\n";
        }
        o << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            o << (i ? " " : "") << px(l.x.to_px(s.x[i])) << ',' << px(l.y.to_px(s.y[i]));
        }
        o << "\"/>\n";
        const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
        o << "<line x1=\"" << px(kWidth - kRight + 12) << "\" y1=\"" << px(ly) << "\" x2=\""
          << px(kWidth - kRight + 32) << "\" y2=\"" << px(ly) << "\" stroke=\"" << color
          << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << px(kWidth - kRight + 38) << "\" y=\"" << px(ly + 4) << "\">" << escape(s.label)
          << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string render_heatmap(const Heatmap& map) {
    const std::size_t rows = map.values.size();
    if (rows == 0 || map.values.front().empty()) throw PlotError("heatmap has no cells");
    const std::size_t cols = map.values.front().size();
    if (map.row_names.size() != rows || map.col_names.size() != cols) {
        throw PlotError("heatmap labels do not match the value grid");
    }
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : map.values) {
        if (r.size() != cols) throw PlotError("heatmap rows have different lengths");
        for (double v : r) {
            if (!std::isfinite(v)) throw PlotError("heatmap contains non-finite values");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double cell = 64.0;
    const double left = 110.0, top = 50.0;
    const double w = left + cell * static_cast<double>(cols) + 30.0;
    const double h = top + cell * static_cast<double>(rows) + 60.0;
    std::ostringstream o;
    open_svg(o, w, h, map.title);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = map.values[r][c];
            const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
            // white to dark blue
            const int red = static_cast<int>(std::lround(247 - t * (247 - 8)));
            const int green = static_cast<int>(std::lround(251 - t * (251 - 48)));
            const int blue = static_cast<int>(std::lround(255 - t * (255 - 107)));
            char fill[16];
            std::snprintf(fill, sizeof fill, "#%02x%02x%02x", red, green, blue);
            const double x = left + cell * static_cast<double>(c);
            const double y = top + cell * static_cast<double>(r);
            o << "<rect class=\"cell\" x=\"" << px(x) << "\" y=\"" << px(y) << "\" width=\"" << px(cell)
              << "\" height=\"" << px(cell) << "\" fill=\"" << fill << "\" stroke=\"white\"/>\n"
              << "<text x=\"" << px(x + cell / 2) << "\" y=\"" << px(y + cell / 2 + 4)
              << "\" text-anchor=\"middle\" fill=\"" << (t > 0.55 ? "white" : "black") << "\">"
              << label_number(v) << "</text>\n";
        }
        o << "<text x=\"" << px(left - 8) << "\" y=\"" << px(top + cell * (static_cast<double>(r) + 0.5) + 4)
          << "\" text-anchor=\"end\">" << escape(map.row_names[r]) << "</text>\n";
    }
    for (std::size_t c = 0; c < cols; ++c) {
        o << "<text x=\"" << px(left + cell * (static_cast<double>(c) + 0.5)) << "\" y=\""
          << px(top + cell * static_cast<double>(rows) + 18) << "\" text-anchor=\"middle\">"
          << escape(map.col_names[c]) << "</text>\n";
    }
    o << "<text x=\"" << px(left + cell * static_cast<double>(cols) / 2) << "\" y=\"" << px(h - 12)
      << "\" text-anchor=\"middle\">" << escape(map.col_label) << "</text>\n"
      << "<text x=\"14\" y=\"" << px(top + cell * static_cast<double>(rows) / 2)
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << px(top + cell * static_cast<double>(rows) / 2)
      << ")\">" << escape(map.row_label) << "</text>\n";
    o << "</svg>\n";
    return o.str();
}

}  // namespace swarmplan
