#pragma once

// Minimal deterministic SVG rendering: fixed 800x600 canvas, fixed palette,
// three-decimal coordinates, no timestamps or environment-dependent content,
// so identical inputs produce byte-identical files.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "circspline/errors.hpp"

namespace circspline::svg {

constexpr int kWidth = 800;
constexpr int kHeight = 600;

struct Series {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

namespace detail {

inline const char* palette(std::size_t i) {
    static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
    return kColors[i % 8];
}

inline std::string fmt(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.3f", v);
    std::string s(buffer);
    if (s == "-0.000") s = "0.000";
    return s;
}

inline std::string fmt_label(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.4g", v);
    std::string s(buffer);
    if (s == "-0") s = "0";
    return s;
}

inline std::string escape(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

struct Frame {
    double x0 = 70.0, x1 = 770.0;  // plot area in screen coordinates
    double y0 = 545.0, y1 = 55.0;  // y grows upward in data space
    double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;

    double sx(double x) const { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); }
    double sy(double y) const { return y0 + (y - ymin) / (ymax - ymin) * (y1 - y0); }
};

inline void pad_range(double& lo, double& hi) {
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
        return;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
}

inline std::string header(const std::string& title) {
    std::string out =
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
        "viewBox=\"0 0 800 600\">\n"
        "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
    if (!title.empty())
        out += "<text x=\"400\" y=\"30\" text-anchor=\"middle\" font-family=\"monospace\" "
               "font-size=\"16\">" + escape(title) + "</text>\n";
    return out;
}

inline std::string axes(const Frame& f, const std::string& x_label, const std::string& y_label) {
    std::string out;
    out += "<rect x=\"" + fmt(f.x0) + "\" y=\"" + fmt(f.y1) + "\" width=\"" + fmt(f.x1 - f.x0) +
           "\" height=\"" + fmt(f.y0 - f.y1) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double tx = f.xmin + (f.xmax - f.xmin) * i / 5.0;
        const double ty = f.ymin + (f.ymax - f.ymin) * i / 5.0;
        out += "<line x1=\"" + fmt(f.sx(tx)) + "\" y1=\"" + fmt(f.y0) + "\" x2=\"" + fmt(f.sx(tx)) +
               "\" y2=\"" + fmt(f.y0 + 5.0) + "\" stroke=\"#333333\"/>\n";
        out += "<text x=\"" + fmt(f.sx(tx)) + "\" y=\"" + fmt(f.y0 + 20.0) +
               "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"12\">" +
               fmt_label(tx) + "</text>\n";
        out += "<line x1=\"" + fmt(f.x0 - 5.0) + "\" y1=\"" + fmt(f.sy(ty)) + "\" x2=\"" +
               fmt(f.x0) + "\" y2=\"" + fmt(f.sy(ty)) + "\" stroke=\"#333333\"/>\n";
        out += "<text x=\"" + fmt(f.x0 - 8.0) + "\" y=\"" + fmt(f.sy(ty) + 4.0) +
               "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"12\">" +
               fmt_label(ty) + "</text>\n";
    }
    if (!x_label.empty())
        out += "<text x=\"420\" y=\"585\" text-anchor=\"middle\" font-family=\"monospace\" "
               "font-size=\"13\">" + escape(x_label) + "</text>\n";
    if (!y_label.empty())
        out += "<text x=\"18\" y=\"300\" text-anchor=\"middle\" font-family=\"monospace\" "
               "font-size=\"13\" transform=\"rotate(-90 18 300)\">" + escape(y_label) + "</text>\n";
    return out;
}

inline std::string polyline(const Frame& f, const std::vector<double>& xs,
                            const std::vector<double>& ys, const char* color) {
    std::string out = "<polyline fill=\"none\" stroke=\"";
    out += color;
    out += "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (i) out += " ";
        out += fmt(f.sx(xs[i])) + "," + fmt(f.sy(ys[i]));
    }
    out += "\"/>\n";
    return out;
}

inline std::string legend(const std::vector<Series>& series) {
    std::string out;
    double y = 70.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].label.empty()) continue;
        out += "<line x1=\"640\" y1=\"" + fmt(y - 4.0) + "\" x2=\"665\" y2=\"" + fmt(y - 4.0) +
               "\" stroke=\"" + std::string(palette(i)) + "\" stroke-width=\"2\"/>\n";
        out += "<text x=\"670\" y=\"" + fmt(y) +
               "\" font-family=\"monospace\" font-size=\"12\">" + escape(series[i].label) +
               "</text>\n";
        y += 16.0;
    }
    return out;
}

} // namespace detail

/// Overlaid line plots of one or more curves on shared axes; a one-element
/// vector renders a plain curve plot. The series list must be nonempty and
/// every series must hold matching, at-least-two-point data.
inline std::string linear_curves(const std::vector<Series>& series, const std::string& title = "",
                                 const std::string& x_label = "", const std::string& y_label = "") {
    if (series.empty()) throw input_error("linear_curves: empty curve list");
    detail::Frame f;
    f.xmin = f.xmax = series[0].xs.empty() ? 0.0 : series[0].xs[0];
    bool first = true;
    for (const Series& s : series) {
        if (s.xs.size() != s.ys.size() || s.xs.size() < 2)
            throw input_error("linear_curves: series needs matching xs/ys with at least two points");
        for (std::size_t i = 0; i < s.xs.size(); ++i) {
            if (first) {
                f.xmin = f.xmax = s.xs[i];
                f.ymin = f.ymax = s.ys[i];
                first = false;
            }
            f.xmin = std::min(f.xmin, s.xs[i]);
            f.xmax = std::max(f.xmax, s.xs[i]);
            f.ymin = std::min(f.ymin, s.ys[i]);
            f.ymax = std::max(f.ymax, s.ys[i]);
        }
    }
    detail::pad_range(f.xmin, f.xmax);
    detail::pad_range(f.ymin, f.ymax);

    std::string out = detail::header(title);
    out += detail::axes(f, x_label, y_label);
    if (f.ymin < 0.0 && f.ymax > 0.0)
        out += "<line x1=\"" + detail::fmt(f.x0) + "\" y1=\"" + detail::fmt(f.sy(0.0)) +
               "\" x2=\"" + detail::fmt(f.x1) + "\" y2=\"" + detail::fmt(f.sy(0.0)) +
               "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        out += detail::polyline(f, series[i].xs, series[i].ys, detail::palette(i));
    out += detail::legend(series);
    out += "</svg>\n";
    return out;
}

/// Shaded pointwise band with its centre curve and a dashed zero line.
inline std::string band_plot(const std::vector<double>& xs, const Eigen::VectorXd& lower,
                             const Eigen::VectorXd& upper, const Eigen::VectorXd& centre,
                             const std::string& title = "", const std::string& x_label = "",
                             const std::string& y_label = "") {
    const auto m = static_cast<Eigen::Index>(xs.size());
    if (m < 2 || lower.size() != m || upper.size() != m || centre.size() != m)
        throw input_error("band_plot: need matching xs, lower, upper and centre");
    detail::Frame f;
    f.xmin = xs.front();
    f.xmax = xs.back();
    f.ymin = std::min(0.0, lower.minCoeff());
    f.ymax = std::max(0.0, upper.maxCoeff());
    detail::pad_range(f.xmin, f.xmax);
    detail::pad_range(f.ymin, f.ymax);

    std::string out = detail::header(title);
    out += detail::axes(f, x_label, y_label);

    std::string points;
    for (Eigen::Index i = 0; i < m; ++i)
        points += detail::fmt(f.sx(xs[static_cast<std::size_t>(i)])) + "," +
                  detail::fmt(f.sy(upper(i))) + " ";
    for (Eigen::Index i = m - 1; i >= 0; --i)
        points += detail::fmt(f.sx(xs[static_cast<std::size_t>(i)])) + "," +
                  detail::fmt(f.sy(lower(i))) + (i == 0 ? "" : " ");
    out += "<polygon fill=\"#1f77b4\" fill-opacity=\"0.25\" stroke=\"none\" points=\"" + points +
           "\"/>\n";

    out += "<line x1=\"" + detail::fmt(f.x0) + "\" y1=\"" + detail::fmt(f.sy(0.0)) + "\" x2=\"" +
           detail::fmt(f.x1) + "\" y2=\"" + detail::fmt(f.sy(0.0)) +
           "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";

    std::vector<double> centre_v(centre.data(), centre.data() + centre.size());
    out += detail::polyline(f, xs, centre_v, detail::palette(0));
    out += "</svg>\n";
    return out;
}

/// Bar chart over contiguous bins given by m+1 edges.
inline std::string histogram(const std::vector<double>& edges, const Eigen::VectorXd& heights,
                             const std::string& title = "", const std::string& x_label = "",
                             const std::string& y_label = "") {
    if (edges.size() < 2 || static_cast<Eigen::Index>(edges.size()) != heights.size() + 1)
        throw input_error("histogram: need m+1 edges for m heights");
    detail::Frame f;
    f.xmin = edges.front();
    f.xmax = edges.back();
    f.ymin = 0.0;
    f.ymax = std::max(1e-12, heights.maxCoeff());
    detail::pad_range(f.ymin, f.ymax);
    f.ymin = 0.0;

    std::string out = detail::header(title);
    out += detail::axes(f, x_label, y_label);
    for (Eigen::Index i = 0; i < heights.size(); ++i) {
        const double lo = edges[static_cast<std::size_t>(i)];
        const double hi = edges[static_cast<std::size_t>(i) + 1];
        out += "<rect x=\"" + detail::fmt(f.sx(lo)) + "\" y=\"" + detail::fmt(f.sy(heights(i))) +
               "\" width=\"" + detail::fmt(f.sx(hi) - f.sx(lo)) + "\" height=\"" +
               detail::fmt(f.sy(0.0) - f.sy(heights(i))) +
               "\" fill=\"#1f77b4\" fill-opacity=\"0.85\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

namespace detail {

/// Angular screen mapping shared by the circular plots: angle zero points up
/// (the stored origin) and angles grow clockwise on screen.
inline std::string polar_point(double cx, double cy, double theta, double r) {
    return fmt(cx + r * std::sin(theta)) + "," + fmt(cy - r * std::cos(theta));
}

inline std::string polar_scaffold(double cx, double cy, double radius) {
    std::string out;
    for (int ring = 1; ring <= 4; ++ring)
        out += "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" +
               fmt(radius * ring / 4.0) +
               "\" fill=\"none\" stroke=\"#dddddd\" stroke-width=\"0.8\"/>\n";
    const char* names[] = {"N", "E", "S", "W"};
    for (int q = 0; q < 4; ++q) {
        const double theta = q * 1.5707963267948966;
        const double ux = std::sin(theta), uy = -std::cos(theta);
        out += "<line x1=\"" + fmt(cx) + "\" y1=\"" + fmt(cy) + "\" x2=\"" +
               fmt(cx + radius * ux) + "\" y2=\"" + fmt(cy + radius * uy) +
               "\" stroke=\"#dddddd\" stroke-width=\"0.8\"/>\n";
        out += "<text x=\"" + fmt(cx + (radius + 16.0) * ux) + "\" y=\"" +
               fmt(cy + (radius + 16.0) * uy + 4.0) +
               "\" text-anchor=\"middle\" font-family=\"monospace\" font-size=\"13\">" + names[q] +
               "</text>\n";
    }
    return out;
}

} // namespace detail

/// Wind-rose style sector plot: edges give m+1 bin boundaries in radians from
/// the upward origin, areas scale with the relative frequencies.
inline std::string rose(const std::vector<double>& edges, const Eigen::VectorXd& rel_freq,
                        const std::string& title = "") {
    if (edges.size() < 5 || static_cast<Eigen::Index>(edges.size()) != rel_freq.size() + 1)
        throw input_error("rose: need m+1 edges for m sectors, at least four sectors");
    const double cx = 400.0, cy = 320.0, radius = 230.0;
    const double vmax = std::max(1e-12, rel_freq.maxCoeff());

    std::string out = detail::header(title);
    out += detail::polar_scaffold(cx, cy, radius);
    for (Eigen::Index i = 0; i < rel_freq.size(); ++i) {
        // Equal-area encoding: radius grows with the square root.
        const double r = radius * std::sqrt(std::max(0.0, rel_freq(i)) / vmax);
        const double t0 = edges[static_cast<std::size_t>(i)];
        const double t1 = edges[static_cast<std::size_t>(i) + 1];
        out += "<path d=\"M " + detail::fmt(cx) + "," + detail::fmt(cy) + " L " +
               detail::polar_point(cx, cy, t0, r) + " A " + detail::fmt(r) + "," + detail::fmt(r) +
               " 0 0 1 " + detail::polar_point(cx, cy, t1, r) +
               " Z\" fill=\"#1f77b4\" fill-opacity=\"0.75\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
    }
    out += "</svg>\n";
    return out;
}

/// Closed polar traces of nonnegative curves (densities) around the circle;
/// xs are angles in radians from the upward origin. A dashed reference circle
/// marks the uniform density level when it fits inside the radial range.
inline std::string polar_curves(const std::vector<Series>& series, const std::string& title = "") {
    if (series.empty()) throw input_error("polar_curves: empty curve list");
    const double cx = 400.0, cy = 320.0, radius = 230.0;
    double vmax = 0.0;
    for (const Series& s : series) {
        if (s.xs.size() != s.ys.size() || s.xs.size() < 3)
            throw input_error("polar_curves: series needs matching xs/ys with at least three points");
        for (double v : s.ys) vmax = std::max(vmax, v);
    }
    if (!(vmax > 0.0)) vmax = 1.0;

    std::string out = detail::header(title);
    out += detail::polar_scaffold(cx, cy, radius);

    const double uniform_level = 1.0 / 6.283185307179586;
    if (uniform_level < vmax)
        out += "<circle cx=\"" + detail::fmt(cx) + "\" cy=\"" + detail::fmt(cy) + "\" r=\"" +
               detail::fmt(radius * uniform_level / vmax) +
               "\" fill=\"none\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        std::string points;
        for (std::size_t i = 0; i <= s.xs.size(); ++i) {
            const std::size_t j = i % s.xs.size();
            const double r = radius * std::max(0.0, s.ys[j]) / vmax;
            if (i) points += " ";
            points += detail::polar_point(cx, cy, s.xs[j], r);
        }
        out += "<polyline fill=\"none\" stroke=\"" + std::string(detail::palette(si)) +
               "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    }
    out += detail::legend(series);
    out += "</svg>\n";
    return out;
}

} // namespace circspline::svg
