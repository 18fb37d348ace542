#pragma once

#include <algorithm>
#include <fstream>
#include <string>
#include <vector>

#include "snowshr/csv.hpp"
#include "snowshr/errors.hpp"

namespace snowshr {

struct BarChart {
    std::string title;
    std::string y_label;
    std::vector<std::pair<std::string, double>> bars;  // label, value
    // rect height in SVG user units per value unit; 1.0 makes heights read
    // back as the raw values
    double units_per_value = 1.0;
};

// Self-contained SVG bar chart. Each bar carries the exact value in a
// data-value attribute using the shared fixed-point formatting, and its rect
// height is value * units_per_value, so tests can parse numbers back out.
inline void write_bar_chart_svg(const BarChart& chart, const std::string& path) {
    if (chart.bars.empty()) throw InputError("write_bar_chart_svg: no bars");
    const double bar_w = 22.0, gap = 8.0, margin = 48.0, label_h = 30.0, title_h = 28.0;
    double max_h = 1.0;
    for (const auto& [label, value] : chart.bars)
        max_h = std::max(max_h, value * chart.units_per_value);
    const double width = 2 * margin + chart.bars.size() * (bar_w + gap) - gap;
    const double base_y = title_h + max_h + 10.0;
    const double height = base_y + label_h;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << format_fixed(width, 2)
        << " " << format_fixed(height, 2) << "\">\n";
    out << "  <title>" << chart.title << "</title>\n";
    out << "  <text x=\"" << format_fixed(width / 2, 2)
        << "\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">" << chart.title << "</text>\n";
    out << "  <line x1=\"" << format_fixed(margin - 6, 2) << "\" y1=\"" << format_fixed(base_y, 2)
        << "\" x2=\"" << format_fixed(width - margin + 6, 2) << "\" y2=\""
        << format_fixed(base_y, 2) << "\" stroke=\"black\"/>\n";
    out << "  <text x=\"12\" y=\"" << format_fixed(base_y / 2, 2)
        << "\" font-size=\"10\" transform=\"rotate(-90 12 " << format_fixed(base_y / 2, 2)
        << ")\" text-anchor=\"middle\">" << chart.y_label << "</text>\n";
    for (std::size_t i = 0; i < chart.bars.size(); ++i) {
        const auto& [label, value] = chart.bars[i];
        const double h = value * chart.units_per_value;
        const double x = margin + i * (bar_w + gap);
        out << "  <rect x=\"" << format_fixed(x, 2) << "\" y=\"" << format_fixed(base_y - h, 2)
            << "\" width=\"" << format_fixed(bar_w, 2) << "\" height=\"" << format_fixed(h, 2)
            << "\" fill=\"#4a7ebb\" data-value=\"" << format_fixed(value, 2) << "\"/>\n";
        out << "  <text x=\"" << format_fixed(x + bar_w / 2, 2) << "\" y=\""
            << format_fixed(base_y + 12, 2) << "\" font-size=\"8\" text-anchor=\"middle\">" << label
            << "</text>\n";
    }
    out << "</svg>\n";
    if (!out) throw IoError("failed writing '" + path + "'");
}

// Pulls the height attributes back out of a chart written by
// write_bar_chart_svg, in document order.
inline std::vector<double> read_bar_heights_svg(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<double> heights;
    std::string line;
    while (std::getline(in, line)) {
        const auto marker = line.find("<rect ");
        if (marker == std::string::npos) continue;
        const std::string key = "height=\"";
        const auto at = line.find(key);
        if (at == std::string::npos) continue;
        const auto end = line.find('"', at + key.size());
        heights.push_back(parse_double(line.substr(at + key.size(), end - at - key.size()),
                                       "'" + path + "' rect height"));
    }
    return heights;
}

}  // namespace snowshr
