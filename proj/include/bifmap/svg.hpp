#pragma once

#include <string>
#include <vector>

namespace bifmap {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
};

struct PlotSpec {
  std::string title;
  std::string x_label, y_label;
  bool log_x = false, log_y = false;
  std::vector<PlotSeries> series;
};

// Self-contained SVG (viewBox 0 0 1200 800): axes with ticks, one polyline
// per series, legend in the top-left corner. Points that are non-finite, or
// nonpositive on a log axis, break the line instead of being drawn.
std::string render_svg(const PlotSpec& plot);

}  // namespace bifmap
