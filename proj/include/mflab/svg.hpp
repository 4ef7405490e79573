#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mflab/matrix.hpp"

namespace mflab {

struct PlotSeries {
  std::string label;
  Vector x;
  Vector y;  // non-finite values break the line
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<PlotSeries> series;
};

// Minimal standalone SVG: axes, tick labels, one polyline per series, legend.
std::string render_svg(const LinePlot& plot);
void write_svg(const LinePlot& plot, const std::filesystem::path& path);

}  // namespace mflab
