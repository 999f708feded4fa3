#pragma once

#include <string>
#include <utility>
#include <vector>

namespace shapematch {

/// One polyline of an SVG line chart.
struct SvgSeries {
  std::string label;
  std::string color;  // e.g. "#4477aa"
  std::vector<std::pair<double, double>> points;
};

void svg_line_chart(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series);

/// Grouped bar chart: one group per label, one bar per series value.
struct SvgBarSeries {
  std::string label;
  std::string color;
  std::vector<double> values;  // one per group
};

void svg_bar_chart(const std::string& path, const std::string& title,
                   const std::vector<std::string>& group_labels,
                   const std::vector<SvgBarSeries>& series);

}  // namespace shapematch
