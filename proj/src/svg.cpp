#include "unlearn/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "unlearn/error.hpp"

namespace unlearn::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct Frame {
    double x0, x1, y0, y1;
    double px(double x) const { return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void widen(double& lo, double& hi) {
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
}

std::string header(const std::string& title) {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
                    num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(title) +
         "</text>\n";
    return s;
}

std::string axes(const Frame& f, const std::string& x_label, const std::string& y_label, bool x_ticks) {
    std::string s;
    const double bx = kLeft, by = kHeight - kBottom, tx = kWidth - kRight;
    s += "<line x1=\"" + num(bx) + "\" y1=\"" + num(by) + "\" x2=\"" + num(tx) + "\" y2=\"" + num(by) +
         "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + num(bx) + "\" y1=\"" + num(by) + "\" x2=\"" + num(bx) + "\" y2=\"" + num(kTop) +
         "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double v = f.y0 + (f.y1 - f.y0) * i / 4.0;
        s += "<text x=\"" + num(bx - 6) + "\" y=\"" + num(f.py(v) + 4) + "\" text-anchor=\"end\">" + tick_label(v) +
             "</text>\n";
        if (x_ticks) {
            const double u = f.x0 + (f.x1 - f.x0) * i / 4.0;
            s += "<text x=\"" + num(f.px(u)) + "\" y=\"" + num(by + 16) + "\" text-anchor=\"middle\">" +
                 tick_label(u) + "</text>\n";
        }
    }
    s += "<text x=\"" + num((bx + tx) / 2) + "\" y=\"" + num(kHeight - 10) + "\" text-anchor=\"middle\">" +
         escape(x_label) + "</text>\n";
    s += "<text transform=\"translate(16," + num((by + kTop) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         escape(y_label) + "</text>\n";
    return s;
}

std::string legend_entry(std::size_t i, const std::string& label, bool dashed) {
    const double y = kTop + 10 + 18 * static_cast<double>(i);
    const double x = kWidth - kRight + 12;
    std::string s = "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x + 20) + "\" y2=\"" + num(y) +
                    "\" stroke=\"" + kPalette[i % 7] + "\" stroke-width=\"3\"" +
                    (dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
    s += "<text x=\"" + num(x + 26) + "\" y=\"" + num(y + 4) + "\">" + escape(label) + "</text>\n";
    return s;
}

}  // namespace

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
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

std::string line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                       const std::vector<Series>& series) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = 0.0, y1 = -x0;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) throw InputError("series '" + s.label + "' has mismatched x/y lengths");
        for (double v : s.x) x0 = std::min(x0, v), x1 = std::max(x1, v);
        for (double v : s.y) y0 = std::min(y0, v), y1 = std::max(y1, v);
    }
    if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
    if (!std::isfinite(y1)) y1 = 1.0;
    widen(x0, x1);
    widen(y0, y1);
    const Frame f{x0, x1, y0, y1};

    std::string s = header(title) + axes(f, x_label, y_label, true);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& ser = series[i];
        s += "<polyline fill=\"none\" stroke=\"" + std::string(kPalette[i % 7]) + "\" stroke-width=\"2\"" +
             (ser.dashed ? " stroke-dasharray=\"5,3\"" : "") + " points=\"";
        for (std::size_t k = 0; k < ser.x.size(); ++k) s += num(f.px(ser.x[k])) + "," + num(f.py(ser.y[k])) + " ";
        s += "\"/>\n";
        s += legend_entry(i, ser.label, ser.dashed);
    }
    return s + "</svg>\n";
}

std::string bar_chart(const std::string& title, const std::string& y_label, const std::vector<std::string>& categories,
                      const std::vector<BarGroup>& groups) {
    double y1 = 0.0;
    for (const auto& g : groups) {
        if (g.values.size() != categories.size()) throw InputError("bar group '" + g.label + "' has the wrong length");
        for (double v : g.values) y1 = std::max(y1, v);
    }
    if (y1 <= 0.0) y1 = 1.0;
    const Frame f{0.0, static_cast<double>(categories.size()), 0.0, y1};

    std::string s = header(title) + axes(f, "", y_label, false);
    const double slot = (kWidth - kLeft - kRight) / std::max<double>(1.0, static_cast<double>(categories.size()));
    const double bar = slot * 0.8 / std::max<double>(1.0, static_cast<double>(groups.size()));
    for (std::size_t c = 0; c < categories.size(); ++c) {
        const double base = kLeft + slot * static_cast<double>(c) + slot * 0.1;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const double v = groups[g].values[c];
            const double top = f.py(v);
            s += "<rect x=\"" + num(base + bar * static_cast<double>(g)) + "\" y=\"" + num(top) + "\" width=\"" +
                 num(bar) + "\" height=\"" + num(f.py(0.0) - top) + "\" fill=\"" + kPalette[g % 7] + "\"/>\n";
        }
        s += "<text x=\"" + num(base + slot * 0.4) + "\" y=\"" + num(kHeight - kBottom + 16) +
             "\" text-anchor=\"middle\">" + escape(categories[c]) + "</text>\n";
    }
    for (std::size_t g = 0; g < groups.size(); ++g) s += legend_entry(g, groups[g].label, false);
    return s + "</svg>\n";
}

}  // namespace unlearn::svg
