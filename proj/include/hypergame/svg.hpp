#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"

namespace hypergame::svg {

struct Series {
    std::string name;
    std::vector<double> x, y;
    std::string color = "#1f77b4";
    bool dashed = false;
    bool markers = false;
};

struct Circle {
    double cx, cy, r;
    std::string color;
    bool dashed = false;
    std::string name;
};

struct Marker {
    double x, y;
    std::string color;
    std::string name;
    char shape = 'o';  // 'o' disc, 'x' cross
};

struct Contours {
    std::function<double(double, double)> f;
    std::vector<double> levels;
    std::string color;
    bool dashed = false;
    std::string name;
    int resolution = 120;
};

struct Plot {
    std::string title, xlabel, ylabel;
    std::vector<Series> series;
    std::vector<Circle> circles;
    std::vector<Marker> markers;
    std::vector<Contours> contours;
    std::optional<std::array<double, 4>> box;  // xmin, xmax, ymin, ymax; fitted to the data otherwise
    bool equal_aspect = false;
    int width = 640, height = 440;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s = buf;
    if (s == "-0.000") s = "0.000";
    return s;
}

inline std::string escape(const std::string& s) {
    std::string o;
    for (char c : s) {
        if (c == '<') o += "&lt;";
        else if (c == '>') o += "&gt;";
        else if (c == '&') o += "&amp;";
        else if (c == '"') o += "&quot;";
        else o += c;
    }
    return o;
}

inline std::string tick_label(double v) {
    char buf[32];
    if (v != 0.0 && (std::abs(v) < 1e-3 || std::abs(v) >= 1e5))
        std::snprintf(buf, sizeof buf, "%.2e", v);
    else
        std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
    double span = hi - lo;
    if (!(span > 0.0)) return {lo};
    double raw = span / target, mag = std::pow(10.0, std::floor(std::log10(raw))), step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> t;
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) t.push_back(v);
    return t;
}

// Segments of the level set f = level over a grid (marching squares, saddles split by the centre value).
inline std::vector<std::array<double, 4>> level_segments(const std::function<double(double, double)>& f, double level,
                                                         const std::array<double, 4>& b, int n) {
    std::vector<double> v((n + 1) * (n + 1));
    auto X = [&](int i) { return b[0] + (b[1] - b[0]) * i / n; };
    auto Y = [&](int j) { return b[2] + (b[3] - b[2]) * j / n; };
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) v[j * (n + 1) + i] = f(X(i), Y(j)) - level;
    std::vector<std::array<double, 4>> segs;
    auto lerp = [](double a, double b) { return a / (a - b); };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double a = v[j * (n + 1) + i], bb = v[j * (n + 1) + i + 1];
            double c = v[(j + 1) * (n + 1) + i + 1], d = v[(j + 1) * (n + 1) + i];
            // edge points: 0 bottom, 1 right, 2 top, 3 left
            std::array<std::array<double, 2>, 4> e{{{X(i) + (X(i + 1) - X(i)) * lerp(a, bb), Y(j)},
                                                     {X(i + 1), Y(j) + (Y(j + 1) - Y(j)) * lerp(bb, c)},
                                                     {X(i) + (X(i + 1) - X(i)) * lerp(d, c), Y(j + 1)},
                                                     {X(i), Y(j) + (Y(j + 1) - Y(j)) * lerp(a, d)}}};
            int code = (a > 0) | ((bb > 0) << 1) | ((c > 0) << 2) | ((d > 0) << 3);
            auto add = [&](int p, int q) { segs.push_back({e[p][0], e[p][1], e[q][0], e[q][1]}); };
            switch (code) {
            case 1: case 14: add(3, 0); break;
            case 2: case 13: add(0, 1); break;
            case 3: case 12: add(3, 1); break;
            case 4: case 11: add(1, 2); break;
            case 6: case 9: add(0, 2); break;
            case 7: case 8: add(3, 2); break;
            case 5: case 10: {
                double centre = 0.25 * (a + bb + c + d);
                if ((centre > 0) == (code == 5)) {
                    add(3, 2);
                    add(0, 1);
                } else {
                    add(3, 0);
                    add(1, 2);
                }
                break;
            }
            default: break;
            }
        }
    return segs;
}

}  // namespace detail

inline std::string render(const Plot& p) {
    using detail::num;
    for (const Series& s : p.series)
        if (s.x.empty() || s.x.size() != s.y.size())
            throw Error(ErrorCode::MissingSeries, "series '" + s.name + "' is empty or ragged");
    std::array<double, 4> b;
    if (p.box) {
        b = *p.box;
    } else {
        b = {INFINITY, -INFINITY, INFINITY, -INFINITY};
        auto take = [&](double x, double y) {
            b[0] = std::min(b[0], x);
            b[1] = std::max(b[1], x);
            b[2] = std::min(b[2], y);
            b[3] = std::max(b[3], y);
        };
        for (const Series& s : p.series)
            for (std::size_t i = 0; i < s.x.size(); ++i) take(s.x[i], s.y[i]);
        for (const Circle& c : p.circles) {
            take(c.cx - c.r, c.cy - c.r);
            take(c.cx + c.r, c.cy + c.r);
        }
        for (const Marker& m : p.markers) take(m.x, m.y);
        if (!std::isfinite(b[0])) throw Error(ErrorCode::MissingSeries, "plot '" + p.title + "' has nothing to draw");
        double px = 0.05 * std::max(b[1] - b[0], 1e-9), py = 0.08 * std::max(b[3] - b[2], 1e-9);
        if (b[1] - b[0] < 1e-12) px = 0.5 * std::max(1.0, std::abs(b[0]));
        if (b[3] - b[2] < 1e-12) py = 0.5 * std::max(1e-3, std::abs(b[2]));
        b = {b[0] - px, b[1] + px, b[2] - py, b[3] + py};
    }
    const double L = 70, R = 170, T = 40, B = 55;
    double pw = p.width - L - R, ph = p.height - T - B;
    if (p.equal_aspect) {
        double sx = pw / (b[1] - b[0]), sy = ph / (b[3] - b[2]), s = std::min(sx, sy);
        pw = s * (b[1] - b[0]);
        ph = s * (b[3] - b[2]);
    }
    auto X = [&](double x) { return L + (x - b[0]) / (b[1] - b[0]) * pw; };
    auto Y = [&](double y) { return T + ph - (y - b[2]) / (b[3] - b[2]) * ph; };

    std::string o;
    o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(p.width) + "\" height=\"" +
         std::to_string(p.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o += "<text x=\"" + num(L + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + detail::escape(p.title) +
         "</text>\n";
    o += "<defs><clipPath id=\"area\"><rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" +
         num(ph) + "\"/></clipPath></defs>\n";
    o += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
         "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (double t : detail::nice_ticks(b[0], b[1])) {
        o += "<line x1=\"" + num(X(t)) + "\" y1=\"" + num(T + ph) + "\" x2=\"" + num(X(t)) + "\" y2=\"" + num(T + ph + 5) +
             "\" stroke=\"#444\"/>\n";
        o += "<text x=\"" + num(X(t)) + "\" y=\"" + num(T + ph + 18) + "\" text-anchor=\"middle\">" + detail::tick_label(t) +
             "</text>\n";
    }
    for (double t : detail::nice_ticks(b[2], b[3])) {
        o += "<line x1=\"" + num(L - 5) + "\" y1=\"" + num(Y(t)) + "\" x2=\"" + num(L) + "\" y2=\"" + num(Y(t)) +
             "\" stroke=\"#444\"/>\n";
        o += "<text x=\"" + num(L - 8) + "\" y=\"" + num(Y(t) + 4) + "\" text-anchor=\"end\">" + detail::tick_label(t) +
             "</text>\n";
    }
    o += "<text x=\"" + num(L + pw / 2) + "\" y=\"" + num(T + ph + 40) + "\" text-anchor=\"middle\">" +
         detail::escape(p.xlabel) + "</text>\n";
    o += "<text transform=\"translate(18," + num(T + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
         detail::escape(p.ylabel) + "</text>\n";

    o += "<g clip-path=\"url(#area)\" fill=\"none\">\n";
    for (const Contours& c : p.contours) {
        std::string dash = c.dashed ? " stroke-dasharray=\"5,3\"" : "";
        for (double lv : c.levels) {
            std::string d;
            for (const auto& s : detail::level_segments(c.f, lv, b, c.resolution))
                d += "M" + num(X(s[0])) + "," + num(Y(s[1])) + "L" + num(X(s[2])) + "," + num(Y(s[3]));
            if (!d.empty())
                o += "<path d=\"" + d + "\" stroke=\"" + c.color + "\" stroke-width=\"0.8\"" + dash + "/>\n";
        }
    }
    for (const Circle& c : p.circles) {
        std::string dash = c.dashed ? " stroke-dasharray=\"6,3\"" : "";
        o += "<ellipse cx=\"" + num(X(c.cx)) + "\" cy=\"" + num(Y(c.cy)) + "\" rx=\"" + num(c.r / (b[1] - b[0]) * pw) +
             "\" ry=\"" + num(c.r / (b[3] - b[2]) * ph) + "\" stroke=\"" + c.color + "\" stroke-width=\"1.6\"" + dash + "/>\n";
    }
    for (const Series& s : p.series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) pts += (i ? " " : "") + num(X(s.x[i])) + "," + num(Y(s.y[i]));
        std::string dash = s.dashed ? " stroke-dasharray=\"6,3\"" : "";
        o += "<polyline points=\"" + pts + "\" stroke=\"" + s.color + "\" stroke-width=\"1.8\"" + dash + "/>\n";
        if (s.markers)
            for (std::size_t i = 0; i < s.x.size(); ++i)
                o += "<circle cx=\"" + num(X(s.x[i])) + "\" cy=\"" + num(Y(s.y[i])) + "\" r=\"2.5\" fill=\"" + s.color + "\"/>\n";
    }
    o += "</g>\n";
    for (const Marker& m : p.markers) {
        double x = X(m.x), y = Y(m.y);
        if (m.shape == 'x')
            o += "<path d=\"M" + num(x - 5) + "," + num(y - 5) + "L" + num(x + 5) + "," + num(y + 5) + "M" + num(x - 5) + "," +
                 num(y + 5) + "L" + num(x + 5) + "," + num(y - 5) + "\" stroke=\"" + m.color + "\" stroke-width=\"2\"/>\n";
        else
            o += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"4.5\" fill=\"" + m.color + "\"/>\n";
    }

    // legend
    double ly = T + 10;
    auto entry = [&](const std::string& name, const std::string& color, bool dashed, bool dot) {
        if (name.empty()) return;
        double lx = L + pw + 15;
        if (dot)
            o += "<circle cx=\"" + num(lx + 10) + "\" cy=\"" + num(ly - 4) + "\" r=\"4\" fill=\"" + color + "\"/>\n";
        else
            o += "<line x1=\"" + num(lx) + "\" y1=\"" + num(ly - 4) + "\" x2=\"" + num(lx + 20) + "\" y2=\"" + num(ly - 4) +
                 "\" stroke=\"" + color + "\" stroke-width=\"2\"" + (dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
        o += "<text x=\"" + num(lx + 26) + "\" y=\"" + num(ly) + "\">" + detail::escape(name) + "</text>\n";
        ly += 18;
    };
    for (const Contours& c : p.contours) entry(c.name, c.color, c.dashed, false);
    for (const Circle& c : p.circles) entry(c.name, c.color, c.dashed, false);
    for (const Series& s : p.series) entry(s.name, s.color, s.dashed, false);
    for (const Marker& m : p.markers) entry(m.name, m.color, false, true);
    o += "</svg>\n";
    return o;
}

}  // namespace hypergame::svg
