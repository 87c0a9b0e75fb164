#pragma once

#include <string>

namespace kcbo {

// Renders every column of a series.csv (first column = x axis) as polylines
// into a static SVG. With logy, nonpositive values are skipped.
void render_csv_to_svg(const std::string& csv_path, const std::string& svg_path, bool logy);

}  // namespace kcbo
