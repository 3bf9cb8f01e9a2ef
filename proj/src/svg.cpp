#include "gasrl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace gasrl::svg {

namespace {

constexpr double kWidth = 720, kHeight = 420;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
const char* kPalette[] = {"#1f77b4", "#2ca02c", "#d62728", "#ff7f0e", "#9467bd", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
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

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!std::isfinite(lo)) lo = 0, hi = 1;
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
};

void header(std::ostringstream& ss, const std::string& title) {
    ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
       << "</text>\n";
}

void axes(std::ostringstream& ss, const Range& y, const std::string& x_label, const std::string& y_label,
          auto&& ymap) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    ss << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = y.lo + (y.hi - y.lo) * i / 5.0;
        const double py = ymap(v);
        ss << "<line x1=\"" << x0 - 4 << "\" y1=\"" << num(py) << "\" x2=\"" << x0 << "\" y2=\"" << num(py)
           << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << x0 - 6 << "\" y=\"" << num(py + 4) << "\" text-anchor=\"end\">" << tick(v) << "</text>\n";
    }
    ss << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">" << escape(x_label)
       << "</text>\n"
       << "<text x=\"18\" y=\"" << (y0 + y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << (y0 + y1) / 2 << ")\">" << escape(y_label) << "</text>\n";
}

void legend(std::ostringstream& ss, const std::vector<std::string>& labels) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double y = kTop + 8 + 16.0 * static_cast<double>(i);
        ss << "<rect x=\"" << kWidth - kRight - 170 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
           << kPalette[i % 6] << "\"/>\n"
           << "<text x=\"" << kWidth - kRight - 155 << "\" y=\"" << y << "\">" << escape(labels[i]) << "</text>\n";
    }
}

}  // namespace

std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<BarGroup>& groups, const std::string& y_label) {
    Range y;
    y.add(0.0);
    for (const auto& g : groups)
        for (double v : g.values) y.add(v);
    y.finish();
    auto ymap = [&](double v) { return (kHeight - kBottom) - (v - y.lo) / (y.hi - y.lo) * (kHeight - kBottom - kTop); };

    std::ostringstream ss;
    header(ss, title);
    axes(ss, y, "", y_label, ymap);
    const double plot_w = kWidth - kLeft - kRight;
    const double slot = plot_w / std::max<std::size_t>(1, categories.size());
    const double bar = 0.8 * slot / std::max<std::size_t>(1, groups.size());
    const double zero = ymap(0.0);
    for (std::size_t c = 0; c < categories.size(); ++c) {
        const double sx = kLeft + slot * static_cast<double>(c) + 0.1 * slot;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            if (c >= groups[g].values.size() || !std::isfinite(groups[g].values[c])) continue;
            const double py = ymap(groups[g].values[c]);
            ss << "<rect x=\"" << num(sx + bar * static_cast<double>(g)) << "\" y=\"" << num(std::min(py, zero))
               << "\" width=\"" << num(bar) << "\" height=\"" << num(std::abs(zero - py)) << "\" fill=\""
               << kPalette[g % 6] << "\"/>\n";
        }
        ss << "<text x=\"" << num(sx + 0.4 * slot) << "\" y=\"" << kHeight - kBottom + 16
           << "\" text-anchor=\"middle\">" << escape(categories[c]) << "</text>\n";
    }
    ss << "<line x1=\"" << kLeft << "\" y1=\"" << num(zero) << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << num(zero)
       << "\" stroke=\"#888\"/>\n";
    std::vector<std::string> labels;
    for (const auto& g : groups) labels.push_back(g.label);
    legend(ss, labels);
    ss << "</svg>\n";
    return ss.str();
}

std::string line_chart(const std::string& title, const std::vector<Series>& series, const std::string& x_label,
                       const std::string& y_label, bool markers) {
    Range x, y;
    for (const auto& s : series) {
        for (double v : s.x) x.add(v);
        for (double v : s.y) y.add(v);
        for (double v : s.lower) y.add(v);
        for (double v : s.upper) y.add(v);
    }
    x.finish();
    y.finish();
    auto xmap = [&](double v) { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); };
    auto ymap = [&](double v) { return (kHeight - kBottom) - (v - y.lo) / (y.hi - y.lo) * (kHeight - kBottom - kTop); };

    std::ostringstream ss;
    header(ss, title);
    axes(ss, y, x_label, y_label, ymap);
    for (int i = 0; i <= 5; ++i) {
        const double v = x.lo + (x.hi - x.lo) * i / 5.0;
        ss << "<text x=\"" << num(xmap(v)) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
           << tick(v) << "</text>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = kPalette[k % 6];
        if (!s.lower.empty() && s.lower.size() == s.x.size() && s.upper.size() == s.x.size()) {
            ss << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) ss << num(xmap(s.x[i])) << "," << num(ymap(s.upper[i])) << " ";
            for (std::size_t i = s.x.size(); i-- > 0;) ss << num(xmap(s.x[i])) << "," << num(ymap(s.lower[i])) << " ";
            ss << "\"/>\n";
        }
        ss << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (std::isfinite(s.y[i])) ss << num(xmap(s.x[i])) << "," << num(ymap(s.y[i])) << " ";
        }
        ss << "\"/>\n";
        if (markers) {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                if (!std::isfinite(s.y[i])) continue;
                ss << "<circle cx=\"" << num(xmap(s.x[i])) << "\" cy=\"" << num(ymap(s.y[i])) << "\" r=\"3\" fill=\""
                   << color << "\"/>\n";
            }
        }
    }
    std::vector<std::string> labels;
    for (const auto& s : series) labels.push_back(s.label);
    legend(ss, labels);
    ss << "</svg>\n";
    return ss.str();
}

}  // namespace gasrl::svg
