#include "kcbo/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace kcbo {

namespace {

struct Csv {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

Csv read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("plot: cannot open " + path);
    Csv csv;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("plot: empty file " + path);
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) csv.columns.push_back(cell);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        if (row.size() == csv.columns.size()) csv.rows.push_back(std::move(row));
    }
    return csv;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

}  // namespace

void render_csv_to_svg(const std::string& csv_path, const std::string& svg_path, bool logy) {
    const Csv csv = read_csv(csv_path);
    if (csv.columns.size() < 2 || csv.rows.empty())
        throw std::runtime_error("plot: need an x column, one value column and data rows");

    const double W = 760, H = 480, ml = 70, mr = 160, mt = 24, mb = 46;
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& row : csv.rows) {
        xmin = std::min(xmin, row[0]);
        xmax = std::max(xmax, row[0]);
        for (std::size_t c = 1; c < row.size(); ++c) {
            const double v = logy ? (row[c] > 0 ? std::log10(row[c]) : ymin) : row[c];
            if (!std::isfinite(v)) continue;
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (!(xmax > xmin)) xmax = xmin + 1;
    if (!(ymax > ymin)) ymax = ymin + 1;

    auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto sy = [&](double v) { return H - mb - (v - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ofstream out(svg_path);
    if (!out) throw std::runtime_error("plot: cannot write " + svg_path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
        << "' font-family='monospace' font-size='12'>\n";
    out << "<rect width='100%' height='100%' fill='white'/>\n";
    out << "<line x1='" << ml << "' y1='" << H - mb << "' x2='" << W - mr << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << H - mb
        << "' stroke='black'/>\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%.4g", xmin);
    out << "<text x='" << ml << "' y='" << H - mb + 18 << "'>" << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.4g", xmax);
    out << "<text x='" << W - mr - 30 << "' y='" << H - mb + 18 << "'>" << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), logy ? "1e%.3g" : "%.4g", ymin);
    out << "<text x='4' y='" << H - mb << "'>" << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), logy ? "1e%.3g" : "%.4g", ymax);
    out << "<text x='4' y='" << mt + 10 << "'>" << buf << "</text>\n";
    out << "<text x='" << (W - mr + ml) / 2 << "' y='" << H - 8 << "'>" << csv.columns[0]
        << "</text>\n";

    for (std::size_t c = 1; c < csv.columns.size(); ++c) {
        const char* color = kPalette[(c - 1) % 8];
        out << "<polyline fill='none' stroke='" << color << "' stroke-width='1.5' points='";
        for (const auto& row : csv.rows) {
            double v = row[c];
            if (logy) {
                if (!(v > 0)) continue;
                v = std::log10(v);
            }
            if (!std::isfinite(v)) continue;
            out << sx(row[0]) << "," << sy(v) << " ";
        }
        out << "'/>\n";
        out << "<text x='" << W - mr + 10 << "' y='" << mt + 16 * c << "' fill='" << color
            << "'>" << csv.columns[c] << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace kcbo
