#pragma once

// Minimal standalone SVG line charts (axes, ticks, legend) so diagnostics
// render without a plotting dependency.

#include <string>
#include <vector>

namespace rcgan::svg {

struct Series {
    std::string name;
    std::string color;  // e.g. "#d62728"
    std::vector<double> xs, ys;
};

struct Panel {
    std::string title;
    std::string x_label, y_label;
    std::vector<Series> series;
};

// Stacked panels sharing the document width.
std::string render_panels(const std::vector<Panel>& panels, int width = 720,
                          int panel_height = 260);

void write_panels(const std::string& path, const std::vector<Panel>& panels, int width = 720,
                  int panel_height = 260);

}  // namespace rcgan::svg
