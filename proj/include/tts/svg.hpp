#pragma once

// Minimal standalone SVG plots: line charts (optionally log-scaled) and bar
// charts with error bars. Output depends only on the input.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tts/errors.hpp"

namespace tts {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // optional, bar charts only
};

enum class PlotKind { line, bar };

struct PlotStyle {
  std::string title;
  std::string x_label;
  std::string y_label;
  PlotKind kind = PlotKind::line;
  bool log_x = false;
  bool log_y = false;
  int width = 720;
  int height = 440;
  std::vector<double> x_markers;  // dotted vertical lines
};

namespace svg_detail {

inline const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                       "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double pix_lo = 0.0, pix_hi = 1.0;

  double map(double v) const {
    const double a = log ? std::log10(v) : v;
    const double t = hi > lo ? (a - lo) / (hi - lo) : 0.5;
    return pix_lo + t * (pix_hi - pix_lo);
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::floor(lo); e <= std::ceil(hi) + 1e-9; e += 1.0) {
        if (e >= lo - 1e-9 && e <= hi + 1e-9) out.push_back(std::pow(10.0, e));
      }
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 5.0, 10.0}) {
      if (raw <= f * mag) {
        step = f * mag;
        break;
      }
    }
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) {
      out.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
    }
    return out;
  }
};

inline Axis fit_axis(const std::vector<double>& values, bool log, double pix_lo,
                     double pix_hi, bool include_zero) {
  Axis ax;
  ax.log = log;
  ax.pix_lo = pix_lo;
  ax.pix_hi = pix_hi;
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (double v : values) {
    const double a = log ? std::log10(v) : v;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  if (include_zero && !log) lo = std::min(lo, 0.0);
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  } else if (!log) {
    const double pad = 0.05 * (hi - lo);
    hi += pad;
    if (!include_zero || lo < 0.0) lo -= pad;
  }
  ax.lo = lo;
  ax.hi = hi;
  return ax;
}

}  // namespace svg_detail

/// Renders the series as a standalone SVG document.
inline std::string render_svg(const std::vector<Series>& series, const PlotStyle& style) {
  using namespace svg_detail;
  if (series.empty()) throw PreconditionError("svg: no series");
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size()) {
      throw PreconditionError("svg: series '" + s.name + "' is empty or has mismatched lengths");
    }
    if (!s.err.empty() && s.err.size() != s.y.size()) {
      throw PreconditionError("svg: series '" + s.name + "' has mismatched error bars");
    }
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      const double e = s.err.empty() ? 0.0 : s.err[k];
      if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k]) || !std::isfinite(e)) {
        throw PreconditionError("svg: non-finite data in series '" + s.name + "'");
      }
      if ((style.log_x && s.x[k] <= 0.0) || (style.log_y && s.y[k] <= 0.0)) {
        throw PreconditionError("svg: non-positive value on a log axis in '" + s.name + "'");
      }
      xs.push_back(s.x[k]);
      ys.push_back(s.y[k]);
      if (e > 0.0) {
        ys.push_back(s.y[k] + e);
        if (!style.log_y || s.y[k] - e > 0.0) ys.push_back(s.y[k] - e);
      }
    }
  }

  const double W = style.width, H = style.height;
  const double left = 70, right = 160, top = 40, bottom = 55;
  const bool bars = style.kind == PlotKind::bar;

  // Bar charts place categories at integer slots labelled by their x value.
  std::vector<double> categories;
  if (bars) {
    for (const auto& s : series) categories.insert(categories.end(), s.x.begin(), s.x.end());
    std::sort(categories.begin(), categories.end());
    categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
  }
  Axis ax;
  if (bars) {
    ax.lo = -0.5;
    ax.hi = static_cast<double>(categories.size()) - 0.5;
    ax.pix_lo = left;
    ax.pix_hi = W - right;
  } else {
    ax = fit_axis(xs, style.log_x, left, W - right, false);
  }
  const Axis ay = fit_axis(ys, style.log_y, H - bottom, top, bars);

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\""
     << style.height << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!style.title.empty()) {
    os << "<text x=\"" << num(W / 2) << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"15\">" << escape(style.title) << "</text>\n";
  }

  // Axes, ticks and grid.
  os << "<g stroke=\"black\" stroke-width=\"1\">\n"
     << "<line x1=\"" << num(left) << "\" y1=\"" << num(H - bottom) << "\" x2=\"" << num(W - right)
     << "\" y2=\"" << num(H - bottom) << "\"/>\n"
     << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left)
     << "\" y2=\"" << num(H - bottom) << "\"/>\n</g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  if (bars) {
    for (std::size_t c = 0; c < categories.size(); ++c) {
      const double px = ax.map(static_cast<double>(c));
      os << "<text x=\"" << num(px) << "\" y=\"" << num(H - bottom + 16)
         << "\" text-anchor=\"middle\">" << escape(tick_label(categories[c])) << "</text>\n";
    }
  } else {
    for (double t : ax.ticks()) {
      const double px = ax.map(t);
      os << "<line x1=\"" << num(px) << "\" y1=\"" << num(H - bottom) << "\" x2=\"" << num(px)
         << "\" y2=\"" << num(H - bottom + 5) << "\" stroke=\"black\"/>\n"
         << "<text x=\"" << num(px) << "\" y=\"" << num(H - bottom + 18)
         << "\" text-anchor=\"middle\">" << escape(tick_label(t)) << "</text>\n";
    }
  }
  for (double t : ay.ticks()) {
    const double py = ay.map(t);
    os << "<line x1=\"" << num(left) << "\" y1=\"" << num(py) << "\" x2=\"" << num(W - right)
       << "\" y2=\"" << num(py) << "\" stroke=\"#dddddd\"/>\n"
       << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py + 4)
       << "\" text-anchor=\"end\">" << escape(tick_label(t)) << "</text>\n";
  }
  if (!style.x_label.empty()) {
    os << "<text x=\"" << num((left + W - right) / 2) << "\" y=\"" << num(H - 12)
       << "\" text-anchor=\"middle\">" << escape(style.x_label) << "</text>\n";
  }
  if (!style.y_label.empty()) {
    os << "<text transform=\"translate(16," << num((top + H - bottom) / 2)
       << ") rotate(-90)\" text-anchor=\"middle\">" << escape(style.y_label) << "</text>\n";
  }
  os << "</g>\n";

  for (double xm : style.x_markers) {
    if (!std::isfinite(xm) || (style.log_x && xm <= 0.0) || bars) continue;
    const double px = ax.map(xm);
    if (px < left || px > W - right) continue;
    os << "<line x1=\"" << num(px) << "\" y1=\"" << num(top) << "\" x2=\"" << num(px) << "\" y2=\""
       << num(H - bottom) << "\" stroke=\"#888888\" stroke-dasharray=\"2,3\"/>\n";
  }

  const double slot = bars ? (ax.pix_hi - ax.pix_lo) / static_cast<double>(categories.size()) : 0.0;
  const double bar_w = bars ? 0.8 * slot / static_cast<double>(series.size()) : 0.0;
  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
    if (bars) {
      os << "<g fill=\"" << color << "\">\n";
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        const auto c = static_cast<double>(
            std::lower_bound(categories.begin(), categories.end(), s.x[k]) - categories.begin());
        const double x0 = ax.map(c) - 0.4 * slot + bar_w * static_cast<double>(si);
        const double base = style.log_y ? ay.pix_lo : ay.map(0.0);
        const double py = ay.map(s.y[k]);
        os << "<rect x=\"" << num(x0) << "\" y=\"" << num(std::min(py, base)) << "\" width=\""
           << num(bar_w) << "\" height=\"" << num(std::abs(base - py)) << "\"/>\n";
        if (!s.err.empty() && s.err[k] > 0.0) {
          const double cx = x0 + 0.5 * bar_w;
          const double y_hi = ay.map(s.y[k] + s.err[k]);
          const double lo_v = s.y[k] - s.err[k];
          const double y_lo = (style.log_y && lo_v <= 0.0) ? ay.pix_lo : ay.map(lo_v);
          os << "<path d=\"M" << num(cx) << ' ' << num(y_lo) << " V" << num(y_hi) << " M"
             << num(cx - 4) << ' ' << num(y_hi) << " H" << num(cx + 4) << " M" << num(cx - 4)
             << ' ' << num(y_lo) << " H" << num(cx + 4)
             << "\" stroke=\"black\" stroke-width=\"1\" fill=\"none\"/>\n";
        }
      }
      os << "</g>\n";
    } else {
      os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t k = 0; k < s.x.size(); ++k) {
        if (k) os << ' ';
        os << num(ax.map(s.x[k])) << ',' << num(ay.map(s.y[k]));
      }
      os << "\"/>\n";
    }
    // Legend entry.
    const double ly = top + 10 + 18 * static_cast<double>(si);
    os << "<rect x=\"" << num(W - right + 12) << "\" y=\"" << num(ly - 8) << "\" width=\"14\" height=\"10\" fill=\""
       << color << "\"/>\n<text x=\"" << num(W - right + 32) << "\" y=\"" << num(ly + 1)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void emit_svg(const std::string& path, const std::vector<Series>& series,
                     const PlotStyle& style) {
  const std::string doc = render_svg(series, style);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << doc;
  if (!out) throw Error("failed writing " + path);
}

}  // namespace tts
