#include "breakeven/svg_chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace breakeven {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 72.0;
constexpr double kRight = 24.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 64.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

const char* colour(std::size_t i) { return kPalette[i % (sizeof kPalette / sizeof *kPalette)]; }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string coord(double v) { return fmt("%.2f", v); }

std::string tick_label(double v) {
  if (v == 0.0) return "0";
  return fmt("%.4g", v);
}

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

// Comments may not contain "--".
std::string comment_safe(std::string s) {
  std::size_t p;
  while ((p = s.find("--")) != std::string::npos) s.replace(p, 2, "- -");
  return s;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range pad(Range r) {
  if (r.hi == r.lo) {
    const double d = r.lo == 0.0 ? 1.0 : std::abs(r.lo) * 0.1;
    r.lo -= d;
    r.hi += d;
  }
  return r;
}

}  // namespace

std::vector<double> nice_ticks(double lo, double hi, std::size_t count) {
  std::vector<double> ticks;
  if (!(hi > lo) || count < 2) {
    ticks.push_back(lo);
    return ticks;
  }
  const double raw = (hi - lo) / static_cast<double>(count - 1);
  const double exponent = std::floor(std::log10(raw));
  const double norm = raw / std::pow(10.0, exponent);
  const double nstep = norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0;
  // Scale by an exact power of ten (divide for negative exponents) so ticks land on short decimals.
  const double p10 = std::pow(10.0, std::abs(exponent));
  const auto at = [&](double k) { return exponent < 0 ? k * nstep / p10 : k * nstep * p10; };
  const double step = at(1.0);
  const double first = std::ceil(lo / step - 1e-9);
  for (double k = first;; k += 1.0) {
    const double t = at(k);
    if (t > hi + step * 1e-9) break;
    ticks.push_back(std::abs(t) < step * 1e-12 ? 0.0 : t);
  }
  return ticks;
}

std::string render_svg(const ChartSpec& spec) {
  // Data ranges.
  double min_pos = std::numeric_limits<double>::infinity();
  std::size_t clamped = 0;
  Range xr{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  Range yr = xr;
  bool any = false;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!s.y[i] || !std::isfinite(*s.y[i]) || !std::isfinite(s.x[i])) continue;
      xr.lo = std::min(xr.lo, s.x[i]);
      xr.hi = std::max(xr.hi, s.x[i]);
      if (*s.y[i] > 0.0) min_pos = std::min(min_pos, *s.y[i]);
      any = true;
    }
  }
  for (const auto& m : spec.vlines) {
    if (!any) break;
    xr.lo = std::min(xr.lo, m.x);
    xr.hi = std::max(xr.hi, m.x);
  }
  const bool log_ok = spec.log_y && std::isfinite(min_pos);
  auto transform = [&](double y) -> double {
    if (!spec.log_y) return y;
    if (!log_ok) return 0.0;
    if (y <= 0.0) y = min_pos;
    return std::log10(y);
  };
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!s.y[i] || !std::isfinite(*s.y[i]) || !std::isfinite(s.x[i])) continue;
      if (spec.log_y && *s.y[i] <= 0.0) ++clamped;
      const double t = transform(*s.y[i]);
      yr.lo = std::min(yr.lo, t);
      yr.hi = std::max(yr.hi, t);
    }
  }
  if (!any) {
    xr = {0.0, 1.0};
    yr = {0.0, 1.0};
  }
  xr = pad(xr);
  yr = pad(yr);
  std::vector<double> xt = nice_ticks(xr.lo, xr.hi);
  std::vector<double> yt;
  if (spec.log_y) {
    for (double e = std::ceil(yr.lo - 1e-9); e <= yr.hi + 1e-9; e += 1.0) yt.push_back(e);
    if (yt.size() < 2) yt = nice_ticks(yr.lo, yr.hi);
  } else {
    yt = nice_ticks(yr.lo, yr.hi);
  }

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double t) { return kTop + ph - (t - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string o;
  o += "<!-- " + comment_safe(spec.metadata) + " -->\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\" "
       "font-family=\"sans-serif\" font-size=\"11\">\n";
  o += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"400\" fill=\"white\"/>\n";
  o += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape(spec.title) +
       "</text>\n";

  // Grid and ticks.
  for (double t : xt) {
    const std::string x = coord(px(t));
    o += "<line x1=\"" + x + "\" y1=\"" + coord(kTop) + "\" x2=\"" + x + "\" y2=\"" +
         coord(kTop + ph) + "\" stroke=\"#e0e0e0\"/>\n";
    o += "<text x=\"" + x + "\" y=\"" + coord(kTop + ph + 16) + "\" text-anchor=\"middle\">" +
         tick_label(t) + "</text>\n";
  }
  for (double t : yt) {
    const std::string y = coord(py(t));
    o += "<line x1=\"" + coord(kLeft) + "\" y1=\"" + y + "\" x2=\"" + coord(kLeft + pw) +
         "\" y2=\"" + y + "\" stroke=\"#e0e0e0\"/>\n";
    const std::string label = spec.log_y && log_ok ? "1e" + fmt("%.0f", t) : tick_label(t);
    o += "<text x=\"" + coord(kLeft - 6) + "\" y=\"" + coord(py(t) + 4) +
         "\" text-anchor=\"end\">" + label + "</text>\n";
  }
  o += "<rect x=\"" + coord(kLeft) + "\" y=\"" + coord(kTop) + "\" width=\"" + coord(pw) +
       "\" height=\"" + coord(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  o += "<text x=\"" + coord(kLeft + pw / 2) + "\" y=\"" + coord(kHeight - 28) +
       "\" text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  o += "<text x=\"16\" y=\"" + coord(kTop + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       coord(kTop + ph / 2) + ")\">" + escape(spec.y_label) + (spec.log_y ? " (log)" : "") +
       "</text>\n";

  if (!any) {
    o += "<text x=\"" + coord(kLeft + pw / 2) + "\" y=\"" + coord(kTop + ph / 2) +
         "\" text-anchor=\"middle\" fill=\"#808080\">no data</text>\n";
  }

  // Series: nullopt / non-finite points split the polyline.
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const auto& s = spec.series[si];
    std::string points;
    auto flush = [&] {
      if (points.empty()) return;
      o += "<polyline fill=\"none\" stroke=\"" + std::string(colour(si)) +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
      points.clear();
    };
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!s.y[i] || !std::isfinite(*s.y[i]) || !std::isfinite(s.x[i]) ||
          (spec.log_y && !log_ok)) {
        flush();
        continue;
      }
      if (!points.empty()) points += ' ';
      points += coord(px(s.x[i])) + "," + coord(py(transform(*s.y[i])));
    }
    flush();
  }

  for (const auto& m : spec.vlines) {
    if (!any) break;
    const std::string x = coord(px(m.x));
    o += "<line x1=\"" + x + "\" y1=\"" + coord(kTop) + "\" x2=\"" + x + "\" y2=\"" +
         coord(kTop + ph) + "\" stroke=\"" + colour(m.series) +
         "\" stroke-dasharray=\"4 3\"><title>" + escape(m.label) + "</title></line>\n";
  }

  // Legend.
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const double y = kTop + 12 + 14.0 * static_cast<double>(si);
    const double x = kLeft + pw - 150;
    o += "<line x1=\"" + coord(x) + "\" y1=\"" + coord(y - 4) + "\" x2=\"" + coord(x + 18) +
         "\" y2=\"" + coord(y - 4) + "\" stroke=\"" + colour(si) + "\" stroke-width=\"2\"/>\n";
    o += "<text x=\"" + coord(x + 24) + "\" y=\"" + coord(y) + "\">" +
         escape(spec.series[si].label) + "</text>\n";
  }

  if (clamped > 0) {
    o += "<text x=\"" + coord(kLeft) + "\" y=\"" + coord(kHeight - 8) +
         "\" font-size=\"10\">* " + std::to_string(clamped) +
         " non-positive value(s) clamped to the panel minimum positive value " +
         fmt("%.4g", min_pos) + "</text>\n";
  }
  o += "</svg>\n";
  return o;
}

}  // namespace breakeven
