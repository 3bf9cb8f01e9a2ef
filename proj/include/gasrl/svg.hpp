#pragma once

#include <string>
#include <vector>

namespace gasrl::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> lower;  // optional band; empty for plain lines
    std::vector<double> upper;
};

struct BarGroup {
    std::string label;
    std::vector<double> values;  // one per category
};

/// Grouped bar chart, one group per series and one slot per category.
std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<BarGroup>& groups, const std::string& y_label);

/// Line chart with optional shaded bands.
std::string line_chart(const std::string& title, const std::vector<Series>& series, const std::string& x_label,
                       const std::string& y_label, bool markers = false);

}  // namespace gasrl::svg
