#pragma once

#include <array>
#include <string>
#include <vector>

namespace metapuck::svg {

// Static SVG charts; enough for adaptation curves, training curves and
// latent scatters. No external renderer involved.

struct LineSeries {
  std::string label;
  std::string color;      // any CSS color
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // optional per-point half-width, shaded around y
};

struct LinePlot {
  std::string title, x_label, y_label;
  std::vector<LineSeries> series;
};

void write_line_plot(const std::string& path, const LinePlot& plot);

struct ScatterSeries {
  std::string label;
  std::string color;
  std::vector<std::array<double, 2>> points;
};

struct ScatterPlot {
  std::string title, x_label, y_label;
  std::vector<ScatterSeries> series;
  // Explicit axis limits; NaN means fit to the data.
  double x_min, x_max, y_min, y_max;

  ScatterPlot();
};

void write_scatter_plot(const std::string& path, const ScatterPlot& plot);

}  // namespace metapuck::svg
