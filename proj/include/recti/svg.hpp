#pragma once

#include <string>
#include <vector>

namespace recti {

// Minimal SVG chart writer: axes, ticks, polylines, markers and error bars,
// linear or log10 scales. Pure text generation.
class SvgPlot {
public:
    SvgPlot(int width, int height, std::string title);

    void set_log_x(bool on) { log_x_ = on; }
    void set_log_y(bool on) { log_y_ = on; }
    void set_axis_labels(std::string x, std::string y);

    void add_series(const std::string& name, const std::vector<double>& xs,
                    const std::vector<double>& ys, const std::string& color,
                    bool line = true, bool markers = true);
    void add_error_bars(const std::vector<double>& xs, const std::vector<double>& lo,
                        const std::vector<double>& hi, const std::string& color);

    std::string render() const;

private:
    struct Series {
        std::string name;
        std::vector<double> xs, ys;
        std::string color;
        bool line;
        bool markers;
    };
    struct ErrorBars {
        std::vector<double> xs, lo, hi;
        std::string color;
    };

    int width_, height_;
    std::string title_;
    std::string x_label_ = "x";
    std::string y_label_ = "y";
    bool log_x_ = false;
    bool log_y_ = false;
    std::vector<Series> series_;
    std::vector<ErrorBars> bars_;
};

std::string svg_escape(const std::string& text);

}  // namespace recti
