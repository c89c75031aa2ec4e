#pragma once

#include <string>
#include <vector>

namespace unlearn::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed = false;
};

struct BarGroup {
    std::string label;          // legend entry
    std::vector<double> values;  // one per category
};

/// Polyline chart with axes, ticks and a legend.
std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series);

/// Grouped bar chart; every group must have one value per category.
std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& categories,
                      const std::vector<BarGroup>& groups);

std::string escape(const std::string& text);

}  // namespace unlearn::svg
