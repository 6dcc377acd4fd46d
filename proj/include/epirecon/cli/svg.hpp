#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "epirecon/util/dates.hpp"

namespace epirecon::cli {

struct Line {
  std::string label;
  std::vector<double> x, y;
  std::string color = "#1f77b4";
  bool dashed = false;
};

struct Band {
  std::string label;
  std::vector<double> x, lo, hi;
  std::string color = "#1f77b4";
};

// Line plot with optional shaded bands and vertical markers. With
// date_axis set, x values are days since 1970-01-01 and ticks print as dates.
struct Plot {
  std::string title, xlabel, ylabel;
  std::vector<Band> bands;
  std::vector<Line> lines;
  std::vector<double> markers;
  std::string marker_color = "#d62728";
  bool date_axis = false;

  std::string render() const;
};

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

// Tick positions at 1, 2 or 5 times a power of ten covering [lo, hi].
inline std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
  const double span = hi - lo;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= target) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) ticks.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  return ticks;
}

inline std::string tick_label(double v, bool date) {
  if (date) return util::format_date(util::Date{std::chrono::days{static_cast<int>(std::lround(v))}});
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

}  // namespace detail

inline std::string Plot::render() const {
  constexpr double W = 800, H = 480, left = 80, right = 170, top = 40, bottom = 60;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto take_x = [&](double v) {
    if (std::isfinite(v)) x0 = std::min(x0, v), x1 = std::max(x1, v);
  };
  auto take_y = [&](double v) {
    if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
  };
  for (const auto& b : bands) {
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      if (!std::isfinite(b.lo[i]) || !std::isfinite(b.hi[i])) continue;
      take_x(b.x[i]);
      take_y(b.lo[i]);
      take_y(b.hi[i]);
    }
  }
  for (const auto& l : lines) {
    for (std::size_t i = 0; i < l.x.size(); ++i) {
      if (!std::isfinite(l.y[i])) continue;
      take_x(l.x[i]);
      take_y(l.y[i]);
    }
  }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0;
  if (!std::isfinite(y0)) y0 = 0.0, y1 = 1.0;
  if (x1 <= x0) x0 -= 0.5, x1 += 0.5;
  if (y1 <= y0) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::fmt(W) + "\" height=\"" + detail::fmt(H) +
       "\" viewBox=\"0 0 " + detail::fmt(W) + " " + detail::fmt(H) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + detail::fmt(left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       detail::escape(title) + "</text>\n";

  for (double t : detail::nice_ticks(y0, y1)) {
    s += "<line x1=\"" + detail::fmt(left) + "\" x2=\"" + detail::fmt(left + pw) + "\" y1=\"" + detail::fmt(py(t)) +
         "\" y2=\"" + detail::fmt(py(t)) + "\" stroke=\"#e0e0e0\"/>\n";
    s += "<text x=\"" + detail::fmt(left - 6) + "\" y=\"" + detail::fmt(py(t) + 4) + "\" text-anchor=\"end\">" +
         detail::tick_label(t, false) + "</text>\n";
  }
  for (double t : detail::nice_ticks(x0, x1, date_axis ? 5 : 6)) {
    s += "<line x1=\"" + detail::fmt(px(t)) + "\" x2=\"" + detail::fmt(px(t)) + "\" y1=\"" + detail::fmt(top + ph) +
         "\" y2=\"" + detail::fmt(top + ph + 5) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + detail::fmt(px(t)) + "\" y=\"" + detail::fmt(top + ph + 20) + "\" text-anchor=\"middle\">" +
         detail::tick_label(t, date_axis) + "</text>\n";
  }
  s += "<rect x=\"" + detail::fmt(left) + "\" y=\"" + detail::fmt(top) + "\" width=\"" + detail::fmt(pw) +
       "\" height=\"" + detail::fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + detail::fmt(left + pw / 2) + "\" y=\"" + detail::fmt(H - 14) + "\" text-anchor=\"middle\">" +
       detail::escape(xlabel) + "</text>\n";
  s += "<text transform=\"translate(18 " + detail::fmt(top + ph / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       detail::escape(ylabel) + "</text>\n";

  for (const auto& b : bands) {
    std::string upper, lower;
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      if (!std::isfinite(b.lo[i]) || !std::isfinite(b.hi[i])) continue;
      upper += detail::fmt(px(b.x[i])) + "," + detail::fmt(py(b.hi[i])) + " ";
    }
    for (std::size_t i = b.x.size(); i-- > 0;) {
      if (!std::isfinite(b.lo[i]) || !std::isfinite(b.hi[i])) continue;
      lower += detail::fmt(px(b.x[i])) + "," + detail::fmt(py(b.lo[i])) + " ";
    }
    s += "<polygon points=\"" + upper + lower + "\" fill=\"" + b.color + "\" fill-opacity=\"0.25\" stroke=\"none\"/>\n";
  }
  for (double m : markers) {
    if (m < x0 || m > x1) continue;
    s += "<line x1=\"" + detail::fmt(px(m)) + "\" x2=\"" + detail::fmt(px(m)) + "\" y1=\"" + detail::fmt(top) +
         "\" y2=\"" + detail::fmt(top + ph) + "\" stroke=\"" + marker_color + "\"/>\n";
  }
  for (const auto& l : lines) {
    // NaN or infinite values break the line into segments.
    std::string pts;
    auto flush = [&] {
      if (!pts.empty()) {
        s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + l.color + "\" stroke-width=\"1.5\"" +
             (l.dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
      }
      pts.clear();
    };
    for (std::size_t i = 0; i < l.x.size(); ++i) {
      if (!std::isfinite(l.y[i])) {
        flush();
        continue;
      }
      pts += detail::fmt(px(l.x[i])) + "," + detail::fmt(py(l.y[i])) + " ";
    }
    flush();
  }

  double ly = top + 10;
  auto legend = [&](const std::string& label, const std::string& color, bool dashed, bool filled) {
    if (label.empty()) return;
    const double lx = left + pw + 12;
    if (filled) {
      s += "<rect x=\"" + detail::fmt(lx) + "\" y=\"" + detail::fmt(ly - 6) + "\" width=\"24\" height=\"10\" fill=\"" +
           color + "\" fill-opacity=\"0.25\"/>\n";
    } else {
      s += "<line x1=\"" + detail::fmt(lx) + "\" x2=\"" + detail::fmt(lx + 24) + "\" y1=\"" + detail::fmt(ly) +
           "\" y2=\"" + detail::fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"1.5\"" +
           (dashed ? " stroke-dasharray=\"6 4\"" : "") + "/>\n";
    }
    s += "<text x=\"" + detail::fmt(lx + 30) + "\" y=\"" + detail::fmt(ly + 4) + "\">" + detail::escape(label) +
         "</text>\n";
    ly += 18;
  };
  for (const auto& b : bands) legend(b.label, b.color, false, true);
  for (const auto& l : lines) legend(l.label, l.color, l.dashed, false);
  s += "</svg>\n";
  return s;
}

// Days since 1970-01-01, the x coordinate of a date axis.
inline double day_number(util::Date d) { return static_cast<double>(d.time_since_epoch().count()); }

}  // namespace epirecon::cli
