#include "plmforge/eval/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "plmforge/errors.hpp"

namespace plmforge::eval::svg {

namespace {

constexpr double kWidth = 640.0, kHeight = 480.0;
constexpr double kMarginL = 70.0, kMarginR = 20.0, kMarginT = 40.0, kMarginB = 55.0;

std::string escape(const std::string& s) {
    std::string out;
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
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

struct Axis {
    double lo = 0.0, hi = 1.0;

    explicit Axis(const std::vector<double>& values) {
        if (!values.empty()) {
            lo = *std::min_element(values.begin(), values.end());
            hi = *std::max_element(values.begin(), values.end());
        }
        if (lo == hi) {
            lo -= 0.5;
            hi += 0.5;
        }
        const double pad = 0.04 * (hi - lo);
        lo -= pad;
        hi += pad;
    }

    double frac(double v) const { return (v - lo) / (hi - lo); }
};

void open_figure(std::ofstream& out, const std::string& title) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << escape(title) << "</text>\n";
}

void draw_frame(std::ofstream& out, const Axis& x, const Axis& y, const std::string& x_label,
                const std::string& y_label) {
    const double x0 = kMarginL, x1 = kWidth - kMarginR;
    const double y0 = kHeight - kMarginB, y1 = kMarginT;
    out << "<rect x=\"" << x0 << "\" y=\"" << y1 << "\" width=\"" << x1 - x0 << "\" height=\""
        << y0 - y1 << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double f = i / 4.0;
        const double px = x0 + f * (x1 - x0);
        const double py = y0 - f * (y0 - y1);
        out << "<text x=\"" << px << "\" y=\"" << y0 + 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(x.lo + f * (x.hi - x.lo)) << "</text>\n";
        out << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << num(y.lo + f * (y.hi - y.lo)) << "</text>\n";
    }
    out << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape(x_label) << "</text>\n";
    out << "<text x=\"16\" y=\"" << (y0 + y1) / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << (y0 + y1) / 2 << ")\">" << escape(y_label)
        << "</text>\n";
}

} // namespace

void write_scatter(const std::string& path, const std::vector<double>& xs,
                   const std::vector<double>& ys, const std::string& x_label,
                   const std::string& y_label, const std::string& title) {
    if (xs.size() != ys.size()) throw ContractError("scatter: coordinate lengths differ");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write SVG: " + path);

    const Axis ax(xs), ay(ys);
    open_figure(out, title);
    draw_frame(out, ax, ay, x_label, y_label);
    const double x0 = kMarginL, x1 = kWidth - kMarginR;
    const double y0 = kHeight - kMarginB, y1 = kMarginT;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double px = x0 + ax.frac(xs[i]) * (x1 - x0);
        const double py = y0 - ay.frac(ys[i]) * (y0 - y1);
        out << "<circle cx=\"" << px << "\" cy=\"" << py
            << "\" r=\"3\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
    }
    out << "</svg>\n";
}

void write_histogram(const std::string& path, const std::vector<double>& values,
                     std::size_t bins, const std::string& x_label, const std::string& title) {
    if (values.empty()) throw ContractError("histogram: no values");
    if (bins == 0) throw ContractError("histogram: need at least one bin");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write SVG: " + path);

    const Axis ax(values);
    std::vector<double> counts(bins, 0.0);
    for (double v : values) {
        auto b = static_cast<std::size_t>(ax.frac(v) * static_cast<double>(bins));
        if (b >= bins) b = bins - 1;
        counts[b] += 1.0;
    }
    Axis ay(counts);
    ay.lo = 0.0;

    open_figure(out, title);
    draw_frame(out, ax, ay, x_label, "count");
    const double x0 = kMarginL, x1 = kWidth - kMarginR;
    const double y0 = kHeight - kMarginB, y1 = kMarginT;
    const double bw = (x1 - x0) / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        const double h = ay.frac(counts[b]) * (y0 - y1);
        out << "<rect x=\"" << x0 + static_cast<double>(b) * bw << "\" y=\"" << y0 - h
            << "\" width=\"" << bw * 0.92 << "\" height=\"" << h
            << "\" fill=\"steelblue\" stroke=\"none\"/>\n";
    }
    out << "</svg>\n";
}

} // namespace plmforge::eval::svg
