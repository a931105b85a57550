#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace breakeven {

struct ChartSeries {
  std::string label;
  std::vector<double> x;
  std::vector<std::optional<double>> y;  // nullopt breaks the line
};

struct ChartMarker {
  double x = 0.0;
  std::size_t series = 0;  // colour follows this series
  std::string label;
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
  std::vector<ChartSeries> series;
  std::vector<ChartMarker> vlines;
  std::string metadata;  // written as the leading XML comment
};

/// Line chart as SVG text. Output depends only on the spec (fixed layout,
/// fixed number formatting), so equal inputs give equal bytes. With log_y,
/// non-positive values are drawn at the smallest positive value of the panel
/// and a footnote says how many were clamped.
std::string render_svg(const ChartSpec& spec);

// Up to `count` round-valued ticks covering [lo, hi].
std::vector<double> nice_ticks(double lo, double hi, std::size_t count = 5);

}  // namespace breakeven
