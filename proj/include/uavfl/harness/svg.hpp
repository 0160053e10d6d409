#pragma once

#include <string>
#include <utility>
#include <vector>

namespace uavfl::harness {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

/// Deterministic, dependency-free SVG line plot (fixed canvas, fixed
/// palette, no timestamps).
std::string line_plot_svg(const std::vector<Series>& series, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel);

}  // namespace uavfl::harness
