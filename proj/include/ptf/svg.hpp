#pragma once

// Minimal SVG charts: line plots over time and output-plane snapshots.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

namespace ptf::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Range {
  double lo = 0.0, hi = 1.0;
};

/// Tick positions at a 1/2/5 x 10^k spacing covering r, about `target` of them.
inline std::vector<double> nice_ticks(Range r, int target = 6) {
  const double span = r.hi - r.lo;
  if (!(span > 0.0) || !std::isfinite(span)) return {r.lo};
  const double raw = span / std::max(1, target);
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> out;
  for (double v = std::ceil(r.lo / step) * step; v <= r.hi + 1e-9 * step; v += step)
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return out;
}

inline Range padded(double lo, double hi, double frac = 0.05) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {};
  if (hi <= lo) {
    const double w = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - w, hi + w};
  }
  const double pad = (hi - lo) * frac;
  return {lo - pad, hi + pad};
}

inline const char* palette(std::size_t k) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22"};
  return colors[k % 10];
}

inline std::string escape(const std::string& s) {
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

class Canvas {
 public:
  Canvas(double width, double height, Range xr, Range yr)
      : w_(width), h_(height), xr_(xr), yr_(yr) {}

  double px(double x) const { return left_ + (x - xr_.lo) / (xr_.hi - xr_.lo) * (w_ - left_ - right_); }
  double py(double y) const { return h_ - bottom_ - (y - yr_.lo) / (yr_.hi - yr_.lo) * (h_ - top_ - bottom_); }

  std::string frame(const std::string& title, const std::string& xlabel, const std::string& ylabel) const {
    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
        w_, h_);
    s += fmt::format("<text x=\"{:.1f}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n", w_ / 2,
                     escape(title));
    for (double t : nice_ticks(xr_)) {
      s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"#e0e0e0\"/>\n", px(t),
                       top_, h_ - bottom_);
      s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n", px(t),
                       h_ - bottom_ + 14, t);
    }
    for (double t : nice_ticks(yr_)) {
      s += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"#e0e0e0\"/>\n", left_,
                       py(t), w_ - right_);
      s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:g}</text>\n", left_ - 4, py(t) + 4, t);
    }
    s += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"black\"/>\n",
                     left_, top_, w_ - left_ - right_, h_ - top_ - bottom_);
    s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", (left_ + w_ - right_) / 2,
                     h_ - 6, escape(xlabel));
    s += fmt::format("<text x=\"14\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {0:.1f})\">{1}</text>\n",
                     (top_ + h_ - bottom_) / 2, escape(ylabel));
    return s;
  }

  std::string legend(const std::vector<std::string>& names) const {
    std::string s;
    for (std::size_t k = 0; k < names.size(); ++k) {
      const double y = top_ + 12 + 14 * static_cast<double>(k);
      s += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       w_ - right_ - 90, y - 4, w_ - right_ - 72, y - 4, palette(k));
      s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{}</text>\n", w_ - right_ - 68, y, escape(names[k]));
    }
    return s;
  }

 private:
  double w_, h_;
  Range xr_, yr_;
  double left_ = 60, right_ = 16, top_ = 28, bottom_ = 40;
};

inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series, double width = 720, double height = 420) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    for (double v : s.x) xlo = std::min(xlo, v), xhi = std::max(xhi, v);
    for (double v : s.y) ylo = std::min(ylo, v), yhi = std::max(yhi, v);
  }
  const Canvas c(width, height, padded(xlo, xhi, 0.0), padded(ylo, yhi));
  std::string out = c.frame(title, xlabel, ylabel);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    names.push_back(s.name);
    std::string pts;
    for (std::size_t j = 0; j < s.x.size() && j < s.y.size(); ++j)
      pts += fmt::format("{}{:.2f},{:.2f}", j ? " " : "", c.px(s.x[j]), c.py(s.y[j]));
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", palette(k), pts);
  }
  out += c.legend(names) + "</svg>\n";
  return out;
}

struct Marker {
  std::string label;
  double x = 0.0, y = 0.0;
  bool hollow = false;
};

/// Scatter of labelled points in a shared square-ish frame.
inline std::string scatter_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                                 const std::vector<Marker>& markers, double width = 420, double height = 420) {
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
  for (const auto& m : markers) {
    xlo = std::min(xlo, m.x), xhi = std::max(xhi, m.x);
    ylo = std::min(ylo, m.y), yhi = std::max(yhi, m.y);
  }
  const Canvas c(width, height, padded(xlo, xhi, 0.15), padded(ylo, yhi, 0.15));
  std::string out = c.frame(title, xlabel, ylabel);
  for (std::size_t k = 0; k < markers.size(); ++k) {
    const auto& m = markers[k];
    out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"5\" fill=\"{}\" stroke=\"{}\"/>\n", c.px(m.x), c.py(m.y),
                       m.hollow ? "none" : palette(k), palette(k));
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", c.px(m.x) + 7, c.py(m.y) - 7, escape(m.label));
  }
  out += "</svg>\n";
  return out;
}

}  // namespace ptf::svg
