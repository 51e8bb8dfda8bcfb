#include "atex/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "atex/types.hpp"

namespace atex {

namespace {

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void pad() {
        if (lo > hi) {
            lo = 0.0;
            hi = 1.0;
        }
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double margin = 0.05 * (hi - lo);
        lo -= margin;
        hi += margin;
    }
};

}  // namespace

void write_svg_plot(const std::string& path, const std::vector<SvgSeries>& series,
                    const SvgPlotOptions& options) {
    const double left = 70, right = 20, top = 40, bottom = 50;
    const double plot_w = options.width - left - right;
    const double plot_h = options.height - top - bottom;

    auto transform = [&](double v, bool log_scale) {
        return log_scale ? std::log10(v) : v;
    };

    Range rx, ry;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (options.log_x && !(x > 0.0)) continue;
            if (options.log_y && !(y > 0.0)) continue;
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            rx.include(transform(x, options.log_x));
            ry.include(transform(y, options.log_y));
        }
    }
    rx.pad();
    ry.pad();

    auto px = [&](double x) { return left + (transform(x, options.log_x) - rx.lo) / (rx.hi - rx.lo) * plot_w; };
    auto py = [&](double y) {
        return top + plot_h - (transform(y, options.log_y) - ry.lo) / (ry.hi - ry.lo) * plot_h;
    };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("write_svg_plot: cannot open '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
        << options.height << "\" viewBox=\"0 0 " << options.width << ' ' << options.height
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << options.width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << options.title << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\""
        << plot_h << "\" fill=\"none\" stroke=\"#444\"/>\n";

    auto tick_label = [&](double t, bool log_scale) {
        const double v = log_scale ? std::pow(10.0, t) : t;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4g", v);
        return std::string(buf);
    };
    for (int i = 0; i <= 4; ++i) {
        const double tx = rx.lo + (rx.hi - rx.lo) * i / 4.0;
        const double ty = ry.lo + (ry.hi - ry.lo) * i / 4.0;
        const double x = left + plot_w * i / 4.0;
        const double y = top + plot_h - plot_h * i / 4.0;
        out << "<line x1=\"" << x << "\" y1=\"" << top + plot_h << "\" x2=\"" << x << "\" y2=\""
            << top + plot_h + 5 << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << top + plot_h + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
            << tick_label(tx, options.log_x) << "</text>\n";
        out << "<line x1=\"" << left - 5 << "\" y1=\"" << y << "\" x2=\"" << left << "\" y2=\"" << y
            << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << y + 3
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
            << tick_label(ty, options.log_y) << "</text>\n";
    }
    out << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << options.height - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << options.x_label << "</text>\n";
    out << "<text x=\"14\" y=\"" << top + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 14 " << top + plot_h / 2 << ")\">" << options.y_label
        << "</text>\n";

    int legend_y = static_cast<int>(top) + 14;
    for (const auto& s : series) {
        std::string pts;
        bool first = true;
        for (const auto& [x, y] : s.points) {
            if (options.log_x && !(x > 0.0)) continue;
            if (options.log_y && !(y > 0.0)) continue;
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (!first) pts += ' ';
            pts += format_fixed(px(x), 2) + "," + format_fixed(py(y), 2);
            first = false;
            if (!s.line) {
                out << "<circle cx=\"" << format_fixed(px(x), 2) << "\" cy=\""
                    << format_fixed(py(y), 2) << "\" r=\"2.5\" fill=\"" << s.color << "\"/>\n";
            }
        }
        if (s.line && !pts.empty())
            out << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << s.color
                << "\" stroke-width=\"1.2\"/>\n";
        if (!s.label.empty()) {
            out << "<rect x=\"" << left + plot_w - 130 << "\" y=\"" << legend_y - 8
                << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
            out << "<text x=\"" << left + plot_w - 115 << "\" y=\"" << legend_y + 1
                << "\" font-family=\"sans-serif\" font-size=\"10\">" << s.label << "</text>\n";
            legend_y += 14;
        }
    }
    out << "</svg>\n";
}

}  // namespace atex
