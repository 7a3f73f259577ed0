#pragma once

#include <optional>
#include <string>
#include <vector>

namespace framing::analysis {

struct BarSeries {
    std::string name;
    std::vector<std::optional<double>> values;  // one per group; nullopt draws nothing
};

// Grouped bar chart with values in [0, 1]; deterministic output.
std::string bar_chart_svg(const std::string& title, const std::vector<std::string>& groups,
                          const std::vector<BarSeries>& series);

}  // namespace framing::analysis
