#include "fireflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fireflow {

namespace {

std::string xml_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

}  // namespace

void write_svg_plot(const SvgPlotSpec& spec, const std::vector<SvgSeries>& series,
                    const std::string& path) {
    const double ml = 70, mr = 20, mt = 40, mb = 55;  // margins
    const double pw = spec.width - ml - mr;
    const double ph = spec.height - mt - mb;

    auto usable = [&](double v, bool log_axis) { return std::isfinite(v) && (!log_axis || v > 0.0); };

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.x[i], spec.log_x) || !usable(s.y[i], spec.log_y)) continue;
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!(xmin <= xmax)) {  // nothing plottable
        xmin = spec.log_x ? 1e-3 : 0.0;
        xmax = 1.0;
    }
    if (!(ymin <= ymax)) {
        ymin = spec.log_y ? 1e-3 : 0.0;
        ymax = 1.0;
    }
    auto widen = [](double& lo, double& hi, bool log_axis) {
        if (log_axis) {
            if (lo == hi) {
                lo *= 0.5;
                hi *= 2.0;
            }
        } else if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
    };
    widen(xmin, xmax, spec.log_x);
    widen(ymin, ymax, spec.log_y);

    auto tx = [&](double v) {
        const double a = spec.log_x ? std::log10(v) : v;
        const double lo = spec.log_x ? std::log10(xmin) : xmin;
        const double hi = spec.log_x ? std::log10(xmax) : xmax;
        return ml + (a - lo) / (hi - lo) * pw;
    };
    auto ty = [&](double v) {
        const double a = spec.log_y ? std::log10(v) : v;
        const double lo = spec.log_y ? std::log10(ymin) : ymin;
        const double hi = spec.log_y ? std::log10(ymax) : ymax;
        return mt + ph - (a - lo) / (hi - lo) * ph;
    };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open SVG for writing: " + path);

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
        << spec.height << "\" viewBox=\"0 0 " << spec.width << " " << spec.height << "\">\n";
    out << "<rect x=\"0\" y=\"0\" width=\"" << spec.width << "\" height=\"" << spec.height
        << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << spec.width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << xml_escape(spec.title)
        << "</text>\n";

    // axes box
    out << "<rect x=\"" << num(ml) << "\" y=\"" << num(mt) << "\" width=\"" << num(pw)
        << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

    // ticks
    auto emit_ticks = [&](bool horizontal) {
        const bool log_axis = horizontal ? spec.log_x : spec.log_y;
        const double lo = horizontal ? xmin : ymin;
        const double hi = horizontal ? xmax : ymax;
        std::vector<double> ticks;
        if (log_axis) {
            const int e0 = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
            const int e1 = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
            for (int e = e0; e <= e1; ++e) ticks.push_back(std::pow(10.0, e));
        } else {
            for (int i = 0; i <= 5; ++i) ticks.push_back(lo + (hi - lo) * i / 5.0);
        }
        for (double v : ticks) {
            if (horizontal) {
                const double px = tx(v);
                out << "<line x1=\"" << num(px) << "\" y1=\"" << num(mt + ph) << "\" x2=\""
                    << num(px) << "\" y2=\"" << num(mt + ph + 5) << "\" stroke=\"black\"/>\n";
                out << "<text x=\"" << num(px) << "\" y=\"" << num(mt + ph + 20)
                    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
                    << tick_label(v) << "</text>\n";
            } else {
                const double py = ty(v);
                out << "<line x1=\"" << num(ml - 5) << "\" y1=\"" << num(py) << "\" x2=\""
                    << num(ml) << "\" y2=\"" << num(py) << "\" stroke=\"black\"/>\n";
                out << "<text x=\"" << num(ml - 8) << "\" y=\"" << num(py + 4)
                    << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
                    << tick_label(v) << "</text>\n";
            }
        }
    };
    emit_ticks(true);
    emit_ticks(false);

    out << "<text x=\"" << spec.width / 2 << "\" y=\"" << spec.height - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << xml_escape(spec.xlabel) << "</text>\n";
    out << "<text x=\"16\" y=\"" << spec.height / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << spec.height / 2 << ")\">" << xml_escape(spec.ylabel)
        << "</text>\n";

    // series
    double ly_cursor = mt + 14;
    for (const auto& s : series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!usable(s.x[i], spec.log_x) || !usable(s.y[i], spec.log_y)) continue;
            pts += num(tx(s.x[i])) + "," + num(ty(s.y[i])) + " ";
        }
        out << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << s.color
            << "\" stroke-width=\"1.5\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "")
            << "/>\n";
        out << "<line x1=\"" << num(ml + pw - 150) << "\" y1=\"" << num(ly_cursor - 4)
            << "\" x2=\"" << num(ml + pw - 130) << "\" y2=\"" << num(ly_cursor - 4)
            << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
            << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
        out << "<text x=\"" << num(ml + pw - 124) << "\" y=\"" << num(ly_cursor)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(s.label)
            << "</text>\n";
        ly_cursor += 16;
    }

    out << "</svg>\n";
    if (!out) throw std::runtime_error("SVG write failed: " + path);
}

}  // namespace fireflow
