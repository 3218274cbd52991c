#include "recti/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace recti {

namespace {

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void grow(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    bool valid() const { return lo <= hi; }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

}  // namespace

std::string svg_escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
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

SvgPlot::SvgPlot(int width, int height, std::string title)
    : width_(width), height_(height), title_(std::move(title)) {}

void SvgPlot::set_axis_labels(std::string x, std::string y) {
    x_label_ = std::move(x);
    y_label_ = std::move(y);
}

void SvgPlot::add_series(const std::string& name, const std::vector<double>& xs,
                         const std::vector<double>& ys, const std::string& color, bool line,
                         bool markers) {
    series_.push_back(Series{name, xs, ys, color, line, markers});
}

void SvgPlot::add_error_bars(const std::vector<double>& xs, const std::vector<double>& lo,
                             const std::vector<double>& hi, const std::string& color) {
    bars_.push_back(ErrorBars{xs, lo, hi, color});
}

std::string SvgPlot::render() const {
    const double ml = 70, mr = 20, mt = 40, mb = 55;
    const double pw = width_ - ml - mr, ph = height_ - mt - mb;

    auto tx = [&](double v) { return log_x_ ? (v > 0 ? std::log10(v) : NAN) : v; };
    auto ty = [&](double v) { return log_y_ ? (v > 0 ? std::log10(v) : NAN) : v; };

    Range rx, ry;
    for (const auto& s : series_) {
        for (double v : s.xs) rx.grow(tx(v));
        for (double v : s.ys) ry.grow(ty(v));
    }
    for (const auto& b : bars_) {
        for (double v : b.xs) rx.grow(tx(v));
        for (double v : b.lo) ry.grow(ty(v));
        for (double v : b.hi) ry.grow(ty(v));
    }
    if (!rx.valid()) { rx.lo = 0.0; rx.hi = 1.0; }
    if (!ry.valid()) { ry.lo = 0.0; ry.hi = 1.0; }
    if (rx.hi == rx.lo) { rx.lo -= 0.5; rx.hi += 0.5; }
    if (ry.hi == ry.lo) { ry.lo -= 0.5; ry.hi += 0.5; }
    const double padx = 0.03 * (rx.hi - rx.lo), pady = 0.05 * (ry.hi - ry.lo);
    rx.lo -= padx; rx.hi += padx;
    ry.lo -= pady; ry.hi += pady;

    auto px = [&](double v) { return ml + (tx(v) - rx.lo) / (rx.hi - rx.lo) * pw; };
    auto py = [&](double v) { return mt + ph - (ty(v) - ry.lo) / (ry.hi - ry.lo) * ph; };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
       << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
    os << "<rect width=\"" << width_ << "\" height=\"" << height_
       << "\" fill=\"white\"/>\n";
    os << "<text x=\"" << width_ / 2 << "\" y=\"24\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"15\">"
       << svg_escape(title_) << "</text>\n";

    // Axes box.
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";

    // Ticks: 5 linear positions in the transformed coordinate.
    for (int i = 0; i <= 4; ++i) {
        const double fx = rx.lo + (rx.hi - rx.lo) * i / 4.0;
        const double X = ml + pw * i / 4.0;
        const double label_x = log_x_ ? std::pow(10.0, fx) : fx;
        os << "<line x1=\"" << X << "\" y1=\"" << mt + ph << "\" x2=\"" << X << "\" y2=\""
           << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << X << "\" y=\"" << mt + ph + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
           << fmt(label_x) << "</text>\n";
        const double fy = ry.lo + (ry.hi - ry.lo) * i / 4.0;
        const double Y = mt + ph - ph * i / 4.0;
        const double label_y = log_y_ ? std::pow(10.0, fy) : fy;
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y << "\" x2=\"" << ml << "\" y2=\"" << Y
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << Y + 4
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
           << fmt(label_y) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height_ - 12
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
       << svg_escape(x_label_) << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
          "transform=\"rotate(-90 16 "
       << mt + ph / 2 << ")\">" << svg_escape(y_label_) << "</text>\n";

    for (const auto& b : bars_) {
        for (std::size_t i = 0; i < b.xs.size(); ++i) {
            const double X = px(b.xs[i]);
            const double Y1 = py(b.lo[i]);
            const double Y2 = py(b.hi[i]);
            if (!std::isfinite(X) || !std::isfinite(Y1) || !std::isfinite(Y2)) continue;
            os << "<line x1=\"" << X << "\" y1=\"" << Y1 << "\" x2=\"" << X << "\" y2=\"" << Y2
               << "\" stroke=\"" << b.color << "\" stroke-width=\"1\"/>\n";
        }
    }

    int legend_row = 0;
    for (const auto& s : series_) {
        if (s.line) {
            std::ostringstream pts;
            bool open = false;
            for (std::size_t i = 0; i < s.xs.size(); ++i) {
                const double X = px(s.xs[i]), Y = py(s.ys[i]);
                if (!std::isfinite(X) || !std::isfinite(Y)) { open = false; continue; }
                if (!open) {
                    if (pts.tellp() > 0) {
                        os << "<polyline points=\"" << pts.str()
                           << "\" fill=\"none\" stroke=\"" << s.color << "\"/>\n";
                        pts.str("");
                    }
                    open = true;
                }
                pts << X << "," << Y << " ";
            }
            if (pts.tellp() > 0)
                os << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\""
                   << s.color << "\"/>\n";
        }
        if (s.markers) {
            for (std::size_t i = 0; i < s.xs.size(); ++i) {
                const double X = px(s.xs[i]), Y = py(s.ys[i]);
                if (!std::isfinite(X) || !std::isfinite(Y)) continue;
                os << "<circle cx=\"" << X << "\" cy=\"" << Y << "\" r=\"2.2\" fill=\""
                   << s.color << "\"/>\n";
            }
        }
        os << "<rect x=\"" << ml + 10 << "\" y=\"" << mt + 8 + 16 * legend_row
           << "\" width=\"10\" height=\"10\" fill=\"" << s.color << "\"/>\n";
        os << "<text x=\"" << ml + 25 << "\" y=\"" << mt + 17 + 16 * legend_row
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << svg_escape(s.name)
           << "</text>\n";
        ++legend_row;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace recti
