#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dpl {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  /// Optional error bars (same length as y).
  std::vector<double> err;
};

/// Static SVG line chart with markers, axes and a legend.
void write_line_plot(const std::filesystem::path &path, const std::string &title, const std::string &x_label,
                     const std::string &y_label, const std::vector<PlotSeries> &series, bool log_y = false);

} // namespace dpl
