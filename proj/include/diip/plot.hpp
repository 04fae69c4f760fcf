#pragma once

#include <string>
#include <utility>
#include <vector>

#include "diip/image.hpp"

namespace diip {

struct Series {
  std::vector<std::pair<double, double>> points;  // (x, y); non-finite y values are skipped
};

struct PlotOptions {
  int width = 640;
  int height = 400;
  bool log_y = false;  // plots log10(y); y <= 0 is skipped
};

/// Axes, min/max tick labels and one colored polyline per series, as an RGB image.
Image render_line_plot(const std::vector<Series>& series, const PlotOptions& opt = {});

}  // namespace diip
