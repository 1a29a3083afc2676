#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace saddleopt::svg {

struct Series {
  std::string label;
  std::string color;
  std::vector<std::pair<double, double>> points;
  bool markers = false;  // draw circles at the data points
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
  std::optional<double> hline;        // horizontal guide (e.g. zero line)
  std::vector<std::string> annotations;
};

// Renders a self-contained SVG line chart. Non-positive values are dropped
// from log-scaled axes.
void write_chart(const Chart& chart, const std::string& path);

}  // namespace saddleopt::svg
