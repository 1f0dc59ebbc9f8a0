#pragma once

// Minimal SVG output: axis-labelled heatmaps and log-log line plots, plus the
// matching gnuplot .dat text.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "rheat/fractional_field.hpp"
#include "rheat/io.hpp"

namespace rheat::svg {

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  std::string label;
};

namespace detail {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// Blue-white-red diverging map on [-1, 1].
inline std::string colour(double u) {
  u = std::clamp(u, -1.0, 1.0);
  int r, g, b;
  if (u < 0) {
    r = g = static_cast<int>(std::lround(255 * (1 + u)));
    b = 255;
  } else {
    r = 255;
    g = b = static_cast<int>(std::lround(255 * (1 - u)));
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

constexpr double W = 640, H = 480, ML = 70, MR = 90, MT = 40, MB = 60;

inline std::string frame(const std::string& title, const Axis& x, const Axis& y) {
  std::string s;
  s += "<text x=\"" + num(W / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" + escape(title) + "</text>\n";
  s += "<text x=\"" + num(ML + (W - ML - MR) / 2) + "\" y=\"" + num(H - 15) +
       "\" text-anchor=\"middle\" font-size=\"13\">" + escape(x.label) + "</text>\n";
  s += "<text x=\"18\" y=\"" + num(MT + (H - MT - MB) / 2) + "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 " +
       num(MT + (H - MT - MB) / 2) + ")\">" + escape(y.label) + "</text>\n";
  s += "<rect x=\"" + num(ML) + "\" y=\"" + num(MT) + "\" width=\"" + num(W - ML - MR) + "\" height=\"" + num(H - MT - MB) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  return s;
}

}  // namespace detail

/// values(r, c): r runs along y (bottom to top), c along x. Downsampled to at
/// most 200 x 200 cells by striding.
inline std::string heatmap(const Matrix& values, const Axis& x, const Axis& y, const std::string& title) {
  using namespace detail;
  const Eigen::Index rows = values.rows(), cols = values.cols();
  const Eigen::Index rs = std::max<Eigen::Index>(1, (rows + 199) / 200);
  const Eigen::Index cs = std::max<Eigen::Index>(1, (cols + 199) / 200);
  const double scale = rows && cols ? std::max(values.cwiseAbs().maxCoeff(), 1e-300) : 1.0;
  const double pw = W - ML - MR, ph = H - MT - MB;
  const Eigen::Index nr = (rows + rs - 1) / rs, nc = (cols + cs - 1) / cs;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" font-family=\"sans-serif\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const double cw = pw / static_cast<double>(std::max<Eigen::Index>(nc, 1));
  const double ch = ph / static_cast<double>(std::max<Eigen::Index>(nr, 1));
  for (Eigen::Index a = 0; a < nr; ++a) {
    for (Eigen::Index b = 0; b < nc; ++b) {
      const double v = values(a * rs, b * cs) / scale;
      s += "<rect x=\"" + num(ML + b * cw) + "\" y=\"" + num(MT + ph - (a + 1) * ch) + "\" width=\"" + num(cw + 0.3) +
           "\" height=\"" + num(ch + 0.3) + "\" fill=\"" + colour(v) + "\"/>\n";
    }
  }
  s += frame(title, x, y);
  for (int k = 0; k <= 4; ++k) {
    const double fx = k / 4.0;
    s += "<text x=\"" + num(ML + fx * pw) + "\" y=\"" + num(H - MB + 16) + "\" text-anchor=\"middle\" font-size=\"11\">" +
         num(x.lo + fx * (x.hi - x.lo)) + "</text>\n";
    s += "<text x=\"" + num(ML - 6) + "\" y=\"" + num(MT + ph - fx * ph + 4) + "\" text-anchor=\"end\" font-size=\"11\">" +
         num(y.lo + fx * (y.hi - y.lo)) + "</text>\n";
  }
  // colour bar
  for (int k = 0; k < 50; ++k) {
    const double u = -1.0 + 2.0 * (k + 0.5) / 50.0;
    s += "<rect x=\"" + num(W - MR + 20) + "\" y=\"" + num(MT + ph - (k + 1) * ph / 50.0) + "\" width=\"16\" height=\"" +
         num(ph / 50.0 + 0.3) + "\" fill=\"" + colour(u) + "\"/>\n";
  }
  s += "<text x=\"" + num(W - MR + 40) + "\" y=\"" + num(MT + 10) + "\" font-size=\"11\">" + num(scale) + "</text>\n";
  s += "<text x=\"" + num(W - MR + 40) + "\" y=\"" + num(MT + ph) + "\" font-size=\"11\">" + num(-scale) + "</text>\n";
  return s + "</svg>\n";
}

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

/// Log2-log2 plot. Non-positive points are skipped.
inline std::string loglog(const std::vector<Series>& series, const std::string& xlabel, const std::string& ylabel,
                          const std::string& title) {
  using namespace detail;
  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto& s : series)
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (!(s.x[k] > 0 && s.y[k] > 0)) continue;
      xlo = std::min(xlo, std::log2(s.x[k]));
      xhi = std::max(xhi, std::log2(s.x[k]));
      ylo = std::min(ylo, std::log2(s.y[k]));
      yhi = std::max(yhi, std::log2(s.y[k]));
    }
  if (xlo > xhi) xlo = 0, xhi = 1, ylo = 0, yhi = 1;
  if (xhi - xlo < 1e-9) xlo -= 0.5, xhi += 0.5;
  if (yhi - ylo < 1e-9) ylo -= 0.5, yhi += 0.5;
  const double pw = W - ML - MR, ph = H - MT - MB;
  auto px = [&](double v) { return ML + (std::log2(v) - xlo) / (xhi - xlo) * pw; };
  auto py = [&](double v) { return MT + ph - (std::log2(v) - ylo) / (yhi - ylo) * ph; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" font-family=\"sans-serif\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += frame(title, Axis{xlo, xhi, xlabel + " (log2)"}, Axis{ylo, yhi, ylabel + " (log2)"});
  for (int k = 0; k <= 4; ++k) {
    const double fx = k / 4.0;
    s += "<text x=\"" + num(ML + fx * pw) + "\" y=\"" + num(H - MB + 16) + "\" text-anchor=\"middle\" font-size=\"11\">2^" +
         num(xlo + fx * (xhi - xlo)) + "</text>\n";
    s += "<text x=\"" + num(ML - 6) + "\" y=\"" + num(MT + ph - fx * ph + 4) + "\" text-anchor=\"end\" font-size=\"11\">2^" +
         num(ylo + fx * (yhi - ylo)) + "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& sr = series[i];
    const char* col = palette[i % 5];
    std::string pts;
    for (std::size_t k = 0; k < sr.x.size(); ++k) {
      if (!(sr.x[k] > 0 && sr.y[k] > 0)) continue;
      pts += num(px(sr.x[k])) + "," + num(py(sr.y[k])) + " ";
      s += "<circle cx=\"" + num(px(sr.x[k])) + "\" cy=\"" + num(py(sr.y[k])) + "\" r=\"3.5\" fill=\"" + col + "\"/>\n";
    }
    s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + col + "\" stroke-width=\"1.5\"/>\n";
    s += "<text x=\"" + num(W - MR + 6) + "\" y=\"" + num(MT + 16 + 16 * i) + "\" font-size=\"11\" fill=\"" + col + "\">" +
         escape(sr.name) + "</text>\n";
  }
  return s + "</svg>\n";
}

/// gnuplot "x y value" blocks, one blank line between rows.
inline std::string heatmap_dat(const Matrix& values, const std::vector<double>& xs, const std::vector<double>& ys) {
  std::string s = "# x y value\n";
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      s += format_double(xs[c]) + " " + format_double(ys[r]) + " " + format_double(values(r, c)) + "\n";
    s += "\n";
  }
  return s;
}

inline std::string series_dat(const Series& series) {
  std::string s = "# " + series.name + "\n";
  for (std::size_t k = 0; k < series.x.size(); ++k) s += format_double(series.x[k]) + " " + format_double(series.y[k]) + "\n";
  return s;
}

}  // namespace rheat::svg
