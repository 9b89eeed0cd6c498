#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sflow::numkit::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

/// Polylines, one per series. Series with empty labels are left out of the legend.
std::string line_plot(const Axes& axes, const std::vector<Series>& series);

/// Dots, one colour per series.
std::string scatter_plot(const Axes& axes, const std::vector<Series>& series);

/// Bars over [edges[i], edges[i+1]).
std::string histogram_plot(const Axes& axes, const std::vector<double>& edges, const std::vector<std::size_t>& counts);

}  // namespace sflow::numkit::svg
