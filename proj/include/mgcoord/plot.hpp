#pragma once

#include <string>
#include <utility>
#include <vector>

namespace mgcoord {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;  // (step, value)
};

struct ChartOptions {
  std::string title;
  std::string x_label = "coordination step";
  std::string y_label = "error";
  int width = 720;
  int height = 480;
};

/// Line chart with a logarithmic y axis as a standalone SVG document.
/// Non-positive and non-finite values are skipped.
std::string render_log_chart(const std::vector<Series>& series, const ChartOptions& options = {});

}  // namespace mgcoord
