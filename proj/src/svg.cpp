#include "rcgan/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rcgan::svg {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        } else {
            double m = 0.05 * (hi - lo);
            lo -= m;
            hi += m;
        }
    }
};

}  // namespace

std::string render_panels(const std::vector<Panel>& panels, int width, int panel_height) {
    const int ml = 64, mr = 16, mt = 34, mb = 42;
    int height = panel_height * static_cast<int>(panels.size());
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (size_t pi = 0; pi < panels.size(); ++pi) {
        const Panel& p = panels[pi];
        double top = static_cast<double>(pi) * panel_height;
        double x0 = ml, x1 = width - mr;
        double y0 = top + panel_height - mb, y1 = top + mt;

        Range rx, ry;
        for (const auto& s : p.series) {
            for (double v : s.xs) rx.include(v);
            for (double v : s.ys) ry.include(v);
        }
        if (!std::isfinite(rx.lo) || !std::isfinite(ry.lo)) {
            rx = Range{0.0, 1.0};
            ry = Range{0.0, 1.0};
        }
        rx.pad();
        ry.pad();
        auto px = [&](double v) { return x0 + (v - rx.lo) / (rx.hi - rx.lo) * (x1 - x0); };
        auto py = [&](double v) { return y0 - (v - ry.lo) / (ry.hi - ry.lo) * (y0 - y1); };

        out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << top + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
            << p.title << "</text>\n";
        out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0
            << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1
            << "\" stroke=\"black\"/>\n";

        for (int i = 0; i <= 4; ++i) {
            double fx = rx.lo + (rx.hi - rx.lo) * i / 4.0;
            double fy = ry.lo + (ry.hi - ry.lo) * i / 4.0;
            out << "<line x1=\"" << px(fx) << "\" y1=\"" << y0 << "\" x2=\"" << px(fx)
                << "\" y2=\"" << y0 + 4 << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << px(fx) << "\" y=\"" << y0 + 18
                << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
                << fmt(fx) << "</text>\n";
            out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << py(fy) << "\" x2=\"" << x0
                << "\" y2=\"" << py(fy) << "\" stroke=\"black\"/>\n";
            out << "<text x=\"" << x0 - 8 << "\" y=\"" << py(fy) + 4
                << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
                << fmt(fy) << "</text>\n";
        }
        out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << y0 + 34
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
            << p.x_label << "</text>\n";
        out << "<text x=\"14\" y=\"" << (y0 + y1) / 2
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14 "
            << (y0 + y1) / 2 << ")\">" << p.y_label << "</text>\n";

        double lx = x1 - 150, ly = y1 + 6;
        for (const auto& s : p.series) {
            out << "<polyline fill=\"none\" stroke=\"" << s.color
                << "\" stroke-width=\"1.5\" points=\"";
            for (size_t i = 0; i < s.xs.size(); ++i) {
                out << fmt(px(s.xs[i])) << "," << fmt(py(s.ys[i])) << " ";
            }
            out << "\"/>\n";
            out << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 22 << "\" y2=\""
                << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
            out << "<text x=\"" << lx + 28 << "\" y=\"" << ly + 4
                << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.name << "</text>\n";
            ly += 16;
        }
    }
    out << "</svg>\n";
    return out.str();
}

void write_panels(const std::string& path, const std::vector<Panel>& panels, int width,
                  int panel_height) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << render_panels(panels, width, panel_height);
}

}  // namespace rcgan::svg
