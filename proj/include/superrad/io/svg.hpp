#pragma once

// Static line plots as standalone SVG documents. Output depends only on the
// input data, so identical series render to identical bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "superrad/error.hpp"

namespace superrad::io {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
};

struct SvgPlot {
  std::string document;
  std::vector<std::string> warnings;  // e.g. values clamped to a log-axis floor
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
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

struct AxisMap {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double floor = 0.0;  // smallest plottable value on a log axis

  double transform(double v) const { return log ? std::log10(std::max(v, floor)) : v; }
};

/// Range of one coordinate over all series; on log axes non-positive values
/// are clamped to the smallest positive value present.
inline AxisMap axis_range(const std::vector<Series>& series, bool use_y, bool log, const std::string& name,
                          std::vector<std::string>& warnings) {
  AxisMap m;
  m.log = log;
  double min_pos = std::numeric_limits<double>::infinity();
  std::size_t clamped = 0;
  for (const auto& s : series)
    for (double v : use_y ? s.y : s.x)
      if (std::isfinite(v) && v > 0.0) min_pos = std::min(min_pos, v);
  if (log) {
    if (!std::isfinite(min_pos)) throw ValidationError("svg: log " + name + " axis has no positive values");
    m.floor = min_pos;
    for (const auto& s : series)
      for (double v : use_y ? s.y : s.x)
        if (std::isfinite(v) && v <= 0.0) ++clamped;
    if (clamped)
      warnings.push_back(std::to_string(clamped) + " non-positive value(s) clamped to the log " + name +
                         "-axis floor " + num(min_pos));
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : series)
    for (double v : use_y ? s.y : s.x) {
      if (!std::isfinite(v)) continue;
      const double t = m.transform(v);
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  if (!std::isfinite(lo)) throw ValidationError("svg: " + name + " axis has no finite values");
  if (hi - lo < 1e-12 * (1.0 + std::abs(hi))) {
    lo -= 0.5;
    hi += 0.5;
  }
  m.lo = lo;
  m.hi = hi;
  return m;
}

}  // namespace detail

inline SvgPlot render_svg(const std::vector<Series>& series, const Axes& axes) {
  if (series.empty()) throw ValidationError("svg: no series to plot");
  for (const auto& s : series) {
    if (s.x.empty()) throw ValidationError("svg: series '" + s.label + "' is empty");
    if (s.x.size() != s.y.size()) throw ValidationError("svg: series '" + s.label + "' has mismatched x and y");
  }
  SvgPlot out;
  const auto mx = detail::axis_range(series, false, axes.log_x, "x", out.warnings);
  const auto my = detail::axis_range(series, true, axes.log_y, "y", out.warnings);

  const double W = 640, H = 420, left = 80, right = 20, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double v) { return left + (mx.transform(v) - mx.lo) / (mx.hi - mx.lo) * pw; };
  auto py = [&](double v) { return top + ph - (my.transform(v) - my.lo) / (my.hi - my.lo) * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

  using detail::num;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(W) << "\" height=\"" << num(H)
     << "\" viewBox=\"0 0 " << num(W) << ' ' << num(H) << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  if (!axes.title.empty())
    os << "<text class=\"title\" x=\"" << num(W / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
       << detail::escape_xml(axes.title) << "</text>\n";
  os << "<text class=\"xlabel\" x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 15)
     << "\" text-anchor=\"middle\" font-size=\"13\">" << detail::escape_xml(axes.x_label) << "</text>\n";
  os << "<text class=\"ylabel\" x=\"18\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" font-size=\"13\""
     << " transform=\"rotate(-90 18 " << num(top + ph / 2) << ")\">" << detail::escape_xml(axes.y_label)
     << "</text>\n";

  auto ticks = [&](const detail::AxisMap& m, bool horizontal) {
    for (int i = 0; i <= 4; ++i) {
      const double t = m.lo + (m.hi - m.lo) * i / 4.0;
      const double value = m.log ? std::pow(10.0, t) : t;
      if (horizontal) {
        const double x = left + pw * i / 4.0;
        os << "<line x1=\"" << num(x) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(x) << "\" y2=\""
           << num(top + ph + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(x) << "\" y=\"" << num(top + ph + 20)
           << "\" text-anchor=\"middle\" font-size=\"11\">" << num(value) << "</text>\n";
      } else {
        const double y = top + ph - ph * i / 4.0;
        os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left) << "\" y2=\""
           << num(y) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(y + 4)
           << "\" text-anchor=\"end\" font-size=\"11\">" << num(value) << "</text>\n";
      }
    }
  };
  ticks(mx, true);
  ticks(my, false);

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = colors[s % std::size(colors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      const double x = series[s].x[i], y = series[s].y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      os << (first ? "" : " ") << num(px(x)) << ',' << num(py(y));
      first = false;
    }
    os << "\"/>\n";
  }
  if (series.size() > 1) {
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double y = top + 16 + 16 * double(s);
      os << "<g class=\"legend\"><line x1=\"" << num(left + pw - 150) << "\" y1=\"" << num(y - 4) << "\" x2=\""
         << num(left + pw - 130) << "\" y2=\"" << num(y - 4) << "\" stroke=\"" << colors[s % std::size(colors)]
         << "\" stroke-width=\"2\"/><text x=\"" << num(left + pw - 125) << "\" y=\"" << num(y)
         << "\" font-size=\"11\">" << detail::escape_xml(series[s].label) << "</text></g>\n";
    }
  }
  os << "</svg>\n";
  out.document = os.str();
  return out;
}

}  // namespace superrad::io
