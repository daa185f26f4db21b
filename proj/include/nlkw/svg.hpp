#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nlkw/errors.hpp"

namespace nlkw::svg {

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                   "#ff7f0e", "#8c564b", "#17becf"};
    return colors[i % (sizeof(colors) / sizeof(colors[0]))];
}

} // namespace detail

/**
 * Minimal self-contained line plot: axes, tick labels, one polyline with
 * point markers per series, legend in the top-right corner. Log axes apply
 * log10 to the data (all values must then be positive).
 */
inline void write_line_plot(const std::filesystem::path& file, const std::string& title,
                            const std::string& x_label, const std::string& y_label,
                            const std::vector<Series>& series, bool log_x = false,
                            bool log_y = false) {
    const double width = 640, height = 440;
    const double ml = 70, mr = 20, mt = 40, mb = 50;

    auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return log_y ? std::log10(v) : v; };

    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    for (const Series& s : series) {
        for (const auto& [x, y] : s.points) {
            if ((log_x && !(x > 0)) || (log_y && !(y > 0)))
                throw ParameterError("write_line_plot: log axis requires positive data");
            x_min = std::min(x_min, tx(x));
            x_max = std::max(x_max, tx(x));
            y_min = std::min(y_min, ty(y));
            y_max = std::max(y_max, ty(y));
        }
    }
    if (!(x_min <= x_max)) { x_min = 0; x_max = 1; }
    if (!(y_min <= y_max)) { y_min = 0; y_max = 1; }
    if (x_max == x_min) { x_min -= 0.5; x_max += 0.5; }
    if (y_max == y_min) { y_min -= 0.5; y_max += 0.5; }
    const double x_pad = 0.05 * (x_max - x_min), y_pad = 0.08 * (y_max - y_min);
    x_min -= x_pad; x_max += x_pad;
    y_min -= y_pad; y_max += y_pad;

    auto px = [&](double v) { return ml + (tx(v) - x_min) / (x_max - x_min) * (width - ml - mr); };
    auto py = [&](double v) {
        return height - mb - (ty(v) - y_min) / (y_max - y_min) * (height - mt - mb);
    };

    std::ofstream out(file);
    if (!out) throw IoError("write_line_plot: cannot open " + file.string());

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";

    // axes
    out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr
        << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
        << height - mb << "\" stroke=\"black\"/>\n";

    const int n_ticks = 5;
    for (int i = 0; i <= n_ticks; ++i) {
        const double fx = x_min + (x_max - x_min) * i / n_ticks;
        const double fy = y_min + (y_max - y_min) * i / n_ticks;
        const double gx = ml + (width - ml - mr) * i / n_ticks;
        const double gy = height - mb - (height - mt - mb) * i / n_ticks;
        const double x_value = log_x ? std::pow(10.0, fx) : fx;
        const double y_value = log_y ? std::pow(10.0, fy) : fy;
        out << "<line x1=\"" << gx << "\" y1=\"" << height - mb << "\" x2=\"" << gx << "\" y2=\""
            << height - mb + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << gx << "\" y=\"" << height - mb + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << detail::fmt(x_value) << "</text>\n";
        out << "<line x1=\"" << ml - 5 << "\" y1=\"" << gy << "\" x2=\"" << ml << "\" y2=\"" << gy
            << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << detail::fmt(y_value) << "</text>\n";
    }
    out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
        << "</text>\n";
    out << "<text x=\"16\" y=\"" << (mt + height - mb) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 16 " << (mt + height - mb) / 2 << ")\">" << y_label
        << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = detail::palette(s);
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : series[s].points) out << px(x) << "," << py(y) << " ";
        out << "\"/>\n";
        for (const auto& [x, y] : series[s].points)
            out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\""
                << color << "\"/>\n";
        const double ly = mt + 16.0 * static_cast<double>(s);
        out << "<rect x=\"" << width - mr - 150 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\""
            << color << "\"/>\n";
        out << "<text x=\"" << width - mr - 135 << "\" y=\"" << ly + 9
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << series[s].label
            << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("write_line_plot: write failed for " + file.string());
}

} // namespace nlkw::svg
