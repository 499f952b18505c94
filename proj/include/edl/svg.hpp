#pragma once

#include <string>
#include <utility>
#include <vector>

namespace edl::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
};

/// Polyline chart with axes, ticks and a legend.
std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

/// Vertical bar chart of labeled values.
std::string bar_chart(const std::vector<std::pair<std::string, double>>& bars,
                      const ChartOptions& options);

}  // namespace edl::svg
