#include "bifmap/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace bifmap {

namespace {

constexpr double kWidth = 1200, kHeight = 800;
constexpr double kLeft = 110, kRight = 40, kTop = 60, kBottom = 90;

const char* const kColors[] = {"#1f4e9c", "#c0392b", "#2e8b57", "#8e44ad"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct Axis {
  bool log;
  double lo, hi;  // in transformed units

  double transform(double v) const { return log ? std::log10(v) : v; }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }
  double frac(double v) const { return (transform(v) - lo) / (hi - lo); }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::ceil(lo - 1e-9); e <= hi + 1e-9; e += 1.0) out.push_back(std::pow(10.0, e));
      if (out.size() < 2) {
        out = {std::pow(10.0, lo), std::pow(10.0, hi)};
      }
      return out;
    }
    const double raw = (hi - lo) / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
      step = mult * mag;
      if (step >= raw) break;
    }
    for (double t = std::ceil(lo / step - 1e-9) * step; t <= hi + 1e-9 * step; t += step) {
      out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    }
    return out;
  }
};

Axis make_axis(const std::vector<PlotSeries>& series, bool log, bool use_x) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  Axis ax{log, 0.0, 1.0};
  for (const auto& s : series) {
    for (double v : use_x ? s.x : s.y) {
      if (!ax.usable(v)) continue;
      lo = std::min(lo, ax.transform(v));
      hi = std::max(hi, ax.transform(v));
    }
  }
  if (!(lo <= hi)) return ax;  // nothing to draw
  if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
    const double pad = log ? 0.5 : std::max(1.0, std::abs(hi)) * 0.5;
    lo -= pad;
    hi += pad;
  } else if (!use_x) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  ax.lo = lo;
  ax.hi = hi;
  return ax;
}

}  // namespace

std::string render_svg(const PlotSpec& plot) {
  const Axis ax = make_axis(plot.series, plot.log_x, true);
  const Axis ay = make_axis(plot.series, plot.log_y, false);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto px = [&](double v) { return kLeft + ax.frac(v) * pw; };
  const auto py = [&](double v) { return kTop + (1.0 - ay.frac(v)) * ph; };

  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"1200\" height=\"800\" "
       "viewBox=\"0 0 1200 800\" font-family=\"sans-serif\" font-size=\"14\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"1200\" height=\"800\" fill=\"white\"/>\n";
  s << "<text x=\"600\" y=\"35\" text-anchor=\"middle\" font-size=\"18\">" << escape(plot.title)
    << "</text>\n";

  // frame and grid
  s << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw)
    << "\" height=\"" << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double x = px(t);
    if (x < kLeft - 0.5 || x > kLeft + pw + 0.5) continue;
    s << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(x) << "\" y2=\""
      << num(kTop + ph) << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + ph + 22) << "\" text-anchor=\"middle\">"
      << tick_label(t) << "</text>\n";
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    if (y < kTop - 0.5 || y > kTop + ph + 0.5) continue;
    s << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\"" << num(kLeft + pw)
      << "\" y2=\"" << num(y) << "\" stroke=\"#dddddd\"/>\n";
    s << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(y + 5) << "\" text-anchor=\"end\">"
      << tick_label(t) << "</text>\n";
  }
  s << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 30)
    << "\" text-anchor=\"middle\">" << escape(plot.x_label) << "</text>\n";
  s << "<text x=\"30\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 30 "
    << num(kTop + ph / 2) << ")\">" << escape(plot.y_label) << "</text>\n";

  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const auto& ser = plot.series[i];
    const char* color = kColors[i % std::size(kColors)];
    std::vector<std::string> runs(1);
    const std::size_t n = std::min(ser.x.size(), ser.y.size());
    for (std::size_t j = 0; j < n; ++j) {
      if (!ax.usable(ser.x[j]) || !ay.usable(ser.y[j])) {
        if (!runs.back().empty()) runs.emplace_back();
        continue;
      }
      if (!runs.back().empty()) runs.back() += ' ';
      runs.back() += num(px(ser.x[j])) + "," + num(py(ser.y[j]));
    }
    for (const auto& pts : runs) {
      if (pts.empty()) continue;
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"" << pts
        << "\"/>\n";
    }
    const double ly = kTop + 22 + 22 * static_cast<double>(i);
    s << "<line x1=\"" << num(kLeft + 15) << "\" y1=\"" << num(ly - 5) << "\" x2=\"" << num(kLeft + 45)
      << "\" y2=\"" << num(ly - 5) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << num(kLeft + 52) << "\" y=\"" << num(ly) << "\">" << escape(ser.label)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace bifmap
