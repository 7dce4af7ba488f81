// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

namespace ordspec {

struct Series {
  std::string name;
  std::vector<double> y;
};

/// Self-contained SVG line chart with one polyline per series over shared x values.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<double>& x, const std::vector<Series>& series);

}  // namespace ordspec
