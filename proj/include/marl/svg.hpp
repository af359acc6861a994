#pragma once

// Self-contained SVG line plots for learning curves and target comparisons.
// Output is fully determined by the data: fixed palette, fixed layout, no
// timestamps or random ids, numbers via shortest round-trip formatting.

#include <string>
#include <vector>

namespace marl {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  std::vector<double> lo, hi;  // optional band (empty or same length as x)
};

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<PlotSeries>& series);

}  // namespace marl
