#include "metapuck/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace metapuck::svg {

namespace {

constexpr double kWidth = 880, kHeight = 540;
constexpr double kLeft = 76, kRight = 210, kTop = 56, kBottom = 64;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = 0.0, hi = 1.0;

  void widen(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (lo > hi) {  // no finite data at all
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {  // flat data still needs a visible span
      const double pad = std::max(1.0, std::abs(hi)) * 0.5;
      lo -= pad;
      hi += pad;
    } else {
      const double pad = (hi - lo) * 0.06;
      lo -= pad;
      hi += pad;
    }
  }
};

Range fresh_range() {
  Range r;
  r.lo = std::numeric_limits<double>::infinity();
  r.hi = -std::numeric_limits<double>::infinity();
  return r;
}

// Tick step of the form {1,2,5} * 10^k giving roughly `target` divisions.
double nice_step(double span, int target) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag * (1.0 + 1e-9)) return m * mag;
  return 10.0 * mag;
}

class Canvas {
 public:
  Canvas(const Range& xr, const Range& yr) : xr_(xr), yr_(yr) {}

  double px(double x) const { return kLeft + (x - xr_.lo) / (xr_.hi - xr_.lo) * kPlotW; }
  double py(double y) const { return kTop + kPlotH - (y - yr_.lo) / (yr_.hi - yr_.lo) * kPlotH; }

  void open(std::string& out, const std::string& title, const std::string& xl,
            const std::string& yl) const {
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
           "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
           num(kHeight) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + num(kLeft + kPlotW / 2) + "\" y=\"28\" font-size=\"18\" "
           "text-anchor=\"middle\" font-family=\"sans-serif\">" + escape(title) + "</text>\n";
    // axes + ticks
    grid(out);
    out += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(kPlotW) +
           "\" height=\"" + num(kPlotH) + "\" fill=\"none\" stroke=\"#333\"/>\n";
    out += "<text x=\"" + num(kLeft + kPlotW / 2) + "\" y=\"" + num(kHeight - 16) +
           "\" font-size=\"14\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
           escape(xl) + "</text>\n";
    out += "<text x=\"20\" y=\"" + num(kTop + kPlotH / 2) + "\" font-size=\"14\" "
           "text-anchor=\"middle\" font-family=\"sans-serif\" transform=\"rotate(-90 20 " +
           num(kTop + kPlotH / 2) + ")\">" + escape(yl) + "</text>\n";
  }

  void legend_entry(std::string& out, std::size_t index, const std::string& color,
                    const std::string& label) const {
    const double x = kLeft + kPlotW + 18, y = kTop + 14 + 24 * double(index);
    out += "<rect x=\"" + num(x) + "\" y=\"" + num(y - 9) +
           "\" width=\"14\" height=\"14\" fill=\"" + color + "\"/>\n";
    out += "<text x=\"" + num(x + 20) + "\" y=\"" + num(y + 3) +
           "\" font-size=\"13\" font-family=\"sans-serif\">" + escape(label) + "</text>\n";
  }

 private:
  void grid(std::string& out) const {
    const double xs = nice_step(xr_.hi - xr_.lo, 6);
    for (double t = std::ceil(xr_.lo / xs) * xs; t <= xr_.hi + 1e-12; t += xs) {
      const double x = px(t);
      out += "<line x1=\"" + num(x) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(x) +
             "\" y2=\"" + num(kTop + kPlotH) + "\" stroke=\"#ddd\"/>\n";
      out += "<text x=\"" + num(x) + "\" y=\"" + num(kTop + kPlotH + 18) +
             "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
             num(t) + "</text>\n";
    }
    const double ys = nice_step(yr_.hi - yr_.lo, 6);
    for (double t = std::ceil(yr_.lo / ys) * ys; t <= yr_.hi + 1e-12; t += ys) {
      const double y = py(t);
      out += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(y) + "\" x2=\"" +
             num(kLeft + kPlotW) + "\" y2=\"" + num(y) + "\" stroke=\"#ddd\"/>\n";
      out += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(y + 4) +
             "\" font-size=\"12\" text-anchor=\"end\" font-family=\"sans-serif\">" + num(t) +
             "</text>\n";
    }
  }

  Range xr_, yr_;
};

void save(const std::string& path, const std::string& body) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("svg: cannot open " + path);
  os << body;
  if (!os) throw std::runtime_error("svg: write failed for " + path);
}

}  // namespace

void write_line_plot(const std::string& path, const LinePlot& plot) {
  if (plot.series.empty()) throw std::invalid_argument("write_line_plot: no series");
  Range xr = fresh_range(), yr = fresh_range();
  for (const LineSeries& s : plot.series) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("write_line_plot: x/y size mismatch in '" + s.label + "'");
    if (!s.band.empty() && s.band.size() != s.y.size())
      throw std::invalid_argument("write_line_plot: band size mismatch in '" + s.label + "'");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xr.widen(s.x[i]);
      yr.widen(s.y[i]);
      if (!s.band.empty()) {
        yr.widen(s.y[i] - s.band[i]);
        yr.widen(s.y[i] + s.band[i]);
      }
    }
  }
  xr.finish();
  yr.finish();

  Canvas canvas(xr, yr);
  std::string out;
  canvas.open(out, plot.title, plot.x_label, plot.y_label);
  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const LineSeries& s = plot.series[si];
    if (!s.band.empty() && s.x.size() > 1) {
      std::string d = "M";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        d += " " + num(canvas.px(s.x[i])) + " " + num(canvas.py(s.y[i] + s.band[i]));
      for (std::size_t i = s.x.size(); i-- > 0;)
        d += " L " + num(canvas.px(s.x[i])) + " " + num(canvas.py(s.y[i] - s.band[i]));
      out += "<path d=\"" + d + " Z\" fill=\"" + s.color + "\" fill-opacity=\"0.15\" "
             "stroke=\"none\"/>\n";
    }
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) pts += ' ';
      pts += num(canvas.px(s.x[i])) + "," + num(canvas.py(s.y[i]));
    }
    out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      out += "<circle cx=\"" + num(canvas.px(s.x[i])) + "\" cy=\"" + num(canvas.py(s.y[i])) +
             "\" r=\"3\" fill=\"" + s.color + "\"/>\n";
    canvas.legend_entry(out, si, s.color, s.label);
  }
  out += "</svg>\n";
  save(path, out);
}

ScatterPlot::ScatterPlot()
    : x_min(std::numeric_limits<double>::quiet_NaN()),
      x_max(std::numeric_limits<double>::quiet_NaN()),
      y_min(std::numeric_limits<double>::quiet_NaN()),
      y_max(std::numeric_limits<double>::quiet_NaN()) {}

void write_scatter_plot(const std::string& path, const ScatterPlot& plot) {
  if (plot.series.empty()) throw std::invalid_argument("write_scatter_plot: no series");
  Range xr = fresh_range(), yr = fresh_range();
  for (const ScatterSeries& s : plot.series)
    for (const auto& p : s.points) {
      xr.widen(p[0]);
      yr.widen(p[1]);
    }
  xr.finish();
  yr.finish();
  if (std::isfinite(plot.x_min)) xr.lo = plot.x_min;
  if (std::isfinite(plot.x_max)) xr.hi = plot.x_max;
  if (std::isfinite(plot.y_min)) yr.lo = plot.y_min;
  if (std::isfinite(plot.y_max)) yr.hi = plot.y_max;

  Canvas canvas(xr, yr);
  std::string out;
  canvas.open(out, plot.title, plot.x_label, plot.y_label);
  for (std::size_t si = 0; si < plot.series.size(); ++si) {
    const ScatterSeries& s = plot.series[si];
    for (const auto& p : s.points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
      out += "<circle cx=\"" + num(canvas.px(p[0])) + "\" cy=\"" + num(canvas.py(p[1])) +
             "\" r=\"2.5\" fill=\"" + s.color + "\" fill-opacity=\"0.65\"/>\n";
    }
    canvas.legend_entry(out, si, s.color, s.label);
  }
  out += "</svg>\n";
  save(path, out);
}

}  // namespace metapuck::svg
