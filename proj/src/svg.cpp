#include "scsi/svg.hpp"

#include "scsi/common.hpp"
#include "scsi/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace scsi::svg {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Axis {
    bool log = false;
    double lo = 0.0, hi = 1.0;  // in transformed units
    double map(double v) const { return log ? std::log10(v) : v; }
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v, bool log) {
    char buf[32];
    if (log) {
        std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::lround(v)));
    } else {
        std::snprintf(buf, sizeof buf, "%.3g", v);
    }
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

std::vector<double> linear_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(v);
    return t;
}

}  // namespace

std::string render(const Plot& plot, const std::vector<Series>& series) {
    Axis ax{plot.logx}, ay{plot.logy};
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!plot.logx || x > 0) && (!plot.logy || y > 0);
    };
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw Error("svg: series '" + s.label + "' has mismatched x/y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            xmin = std::min(xmin, ax.map(s.x[i]));
            xmax = std::max(xmax, ax.map(s.x[i]));
            ymin = std::min(ymin, ay.map(s.y[i]));
            ymax = std::max(ymax, ay.map(s.y[i]));
        }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (plot.diagonal) {
        xmin = ymin = std::min(xmin, ymin);
        xmax = ymax = std::max(xmax, ymax);
    }
    if (xmax - xmin < 1e-12) xmin -= 0.5, xmax += 0.5;
    if (ymax - ymin < 1e-12) ymin -= 0.5, ymax += 0.5;
    if (plot.logx) xmin = std::floor(xmin), xmax = std::ceil(xmax);
    if (plot.logy) ymin = std::floor(ymin), ymax = std::ceil(ymax);
    if (!plot.logx) {
        const double pad = 0.05 * (xmax - xmin);
        xmin -= pad, xmax += pad;
    }
    if (!plot.logy) {
        const double pad = 0.05 * (ymax - ymin);
        ymin -= pad, ymax += pad;
    }

    const double ml = 70, mr = 20, mt = 40, mb = 50;
    double pw = plot.width - ml - mr, ph = plot.height - mt - mb;
    if (plot.equal_aspect && !plot.logx && !plot.logy) {
        const double sx = pw / (xmax - xmin), sy = ph / (ymax - ymin);
        if (sx > sy) {
            const double extra = (pw / sy - (xmax - xmin)) / 2;
            xmin -= extra, xmax += extra;
        } else {
            const double extra = (ph / sx - (ymax - ymin)) / 2;
            ymin -= extra, ymax += extra;
        }
    }
    ax.lo = xmin, ax.hi = xmax, ay.lo = ymin, ay.hi = ymax;
    auto px = [&](double v) { return ml + (v - ax.lo) / (ax.hi - ax.lo) * pw; };
    auto py = [&](double v) { return mt + ph - (v - ay.lo) / (ay.hi - ay.lo) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << plot.width << "\" height=\""
      << plot.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << plot.width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(plot.title) << "</text>\n";
    o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";

    auto ticks = [&](const Axis& a) {
        if (!a.log) return linear_ticks(a.lo, a.hi);
        std::vector<double> t;
        for (double v = a.lo; v <= a.hi + 1e-9; v += 1.0) t.push_back(v);
        return t;
    };
    for (double v : ticks(ax)) {
        const double x = px(v);
        o << "<line x1=\"" << num(x) << "\" y1=\"" << num(mt + ph) << "\" x2=\"" << num(x) << "\" y2=\""
          << num(mt + ph + 5) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << num(x) << "\" y=\"" << num(mt + ph + 18) << "\" text-anchor=\"middle\">"
          << tick_label(v, ax.log) << "</text>\n";
    }
    for (double v : ticks(ay)) {
        const double y = py(v);
        o << "<line x1=\"" << num(ml - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << ml << "\" y2=\""
          << num(y) << "\" stroke=\"black\"/>\n";
        o << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
          << tick_label(v, ay.log) << "</text>\n";
    }
    o << "<text x=\"" << num(ml + pw / 2) << "\" y=\"" << plot.height - 10
      << "\" text-anchor=\"middle\">" << escape(plot.xlabel) << "</text>\n";
    o << "<text transform=\"translate(16," << num(mt + ph / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">" << escape(plot.ylabel) << "</text>\n";

    o << "<clipPath id=\"area\"><rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << num(pw)
      << "\" height=\"" << num(ph) << "\"/></clipPath>\n<g clip-path=\"url(#area)\">\n";
    if (plot.diagonal) {
        const double lo = std::max(ax.lo, ay.lo), hi = std::min(ax.hi, ay.hi);
        o << "<line x1=\"" << num(px(lo)) << "\" y1=\"" << num(py(lo)) << "\" x2=\"" << num(px(hi))
          << "\" y2=\"" << num(py(hi)) << "\" stroke=\"gray\" stroke-dasharray=\"4,3\"/>\n";
    }
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const std::string color = s.color.empty() ? kPalette[si % 6] : s.color;
        if (s.points) {
            o << "<g fill=\"" << color << "\" fill-opacity=\"0.6\">\n";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!usable(s.x[i], s.y[i])) continue;
                o << "<circle cx=\"" << num(px(ax.map(s.x[i]))) << "\" cy=\"" << num(py(ay.map(s.y[i])))
                  << "\" r=\"" << num(s.radius) << "\"/>\n";
            }
            o << "</g>\n";
        } else {
            o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
            if (s.dashed) o << " stroke-dasharray=\"6,4\"";
            o << " points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (!usable(s.x[i], s.y[i])) continue;
                o << num(px(ax.map(s.x[i]))) << "," << num(py(ay.map(s.y[i]))) << " ";
            }
            o << "\"/>\n";
        }
    }
    o << "</g>\n";
    double ly = mt + 14;
    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        if (s.label.empty()) continue;
        const std::string color = s.color.empty() ? kPalette[si % 6] : s.color;
        o << "<rect x=\"" << num(ml + pw - 150) << "\" y=\"" << num(ly - 9) << "\" width=\"10\" height=\"10\" fill=\""
          << color << "\"/>\n";
        o << "<text x=\"" << num(ml + pw - 135) << "\" y=\"" << num(ly) << "\">" << escape(s.label)
          << "</text>\n";
        ly += 16;
    }
    o << "</svg>\n";
    return o.str();
}

void write(const std::filesystem::path& path, const Plot& plot, const std::vector<Series>& series) {
    write_text_file(path, render(plot, series));
}

}  // namespace scsi::svg
