// Copyright 2026 The dmpt Authors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dmpt::tools
{
struct Chart
{
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    /// Series name -> (x, y) points, drawn in x order.
    std::map<std::string, std::vector<std::pair<double, double>>> series;
};

/// Renders a line chart as a standalone SVG document.
std::string render_svg(const Chart& chart);

/// Writes render_svg(chart) to `path`; throws std::runtime_error on failure.
void write_svg(const std::string& path, const Chart& chart);

}  // namespace dmpt::tools
