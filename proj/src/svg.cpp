#include "marl/svg.hpp"

#include "marl/core.hpp"
#include "marl/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace marl {

namespace {

constexpr int kWidth = 760;
constexpr int kHeight = 440;
constexpr int kMarginLeft = 74;
constexpr int kMarginRight = 24;
constexpr int kMarginTop = 42;
constexpr int kMarginBottom = 58;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

// Two decimals are plenty for pixel coordinates and keep files small while
// staying deterministic.
std::string px(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  return format_double(r == 0.0 ? 0.0 : r);  // normalise -0
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = 0.0, hi = 1.0;
};

// Round the span outward to tidy tick positions.
Range nice_range(double lo, double hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi))) return {0.0, 1.0};
  if (lo == hi) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - pad, hi + pad};
  }
  const double span = hi - lo;
  const double raw_step = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw_step) break;
  }
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step};
}

}  // namespace

void write_line_plot_svg(const std::string& path, const std::string& title,
                         const std::string& x_label, const std::string& y_label,
                         const std::vector<PlotSeries>& series) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const PlotSeries& s : series) {
    if (s.x.size() != s.y.size())
      throw ShapeError("plot series '" + s.label + "': x/y length mismatch");
    if (!s.lo.empty() && (s.lo.size() != s.x.size() || s.hi.size() != s.x.size()))
      throw ShapeError("plot series '" + s.label + "': band length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      const double lo = s.lo.empty() ? s.y[i] : std::min(s.y[i], s.lo[i]);
      const double hi = s.hi.empty() ? s.y[i] : std::max(s.y[i], s.hi[i]);
      ymin = std::min(ymin, lo);
      ymax = std::max(ymax, hi);
    }
  }
  if (!std::isfinite(xmin)) {  // no data at all: render an empty frame
    xmin = 0.0; xmax = 1.0; ymin = 0.0; ymax = 1.0;
  }
  const Range xr = nice_range(xmin, xmax);
  const Range yr = nice_range(ymin, ymax);

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  const auto sx = [&](double v) {
    return kMarginLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w;
  };
  const auto sy = [&](double v) {
    return kMarginTop + plot_h - (v - yr.lo) / (yr.hi - yr.lo) * plot_h;
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\" fill=\"#222\">"
      << escape(title) << "</text>\n";

  // grid + ticks
  for (int i = 0; i <= 5; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 5.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 5.0;
    const std::string gx = px(sx(fx)), gy = px(sy(fy));
    svg << "<line x1=\"" << gx << "\" y1=\"" << px(kMarginTop) << "\" x2=\""
        << gx << "\" y2=\"" << px(kMarginTop + plot_h)
        << "\" stroke=\"#e4e4e4\" stroke-width=\"1\"/>\n";
    svg << "<line x1=\"" << px(kMarginLeft) << "\" y1=\"" << gy << "\" x2=\""
        << px(kMarginLeft + plot_w) << "\" y2=\"" << gy
        << "\" stroke=\"#e4e4e4\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << gx << "\" y=\"" << px(kMarginTop + plot_h + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\" fill=\"#444\">"
        << format_double(fx) << "</text>\n";
    svg << "<text x=\"" << px(kMarginLeft - 8) << "\" y=\"" << px(sy(fy) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\" fill=\"#444\">"
        << format_double(fy) << "</text>\n";
  }
  // frame
  svg << "<rect x=\"" << px(kMarginLeft) << "\" y=\"" << px(kMarginTop)
      << "\" width=\"" << px(plot_w) << "\" height=\"" << px(plot_h)
      << "\" fill=\"none\" stroke=\"#888\" stroke-width=\"1\"/>\n";
  // axis labels
  svg << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\""
      << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" fill=\"#222\">"
      << escape(x_label) << "</text>\n";
  svg << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" fill=\"#222\" transform=\"rotate(-90 18 "
      << kMarginTop + plot_h / 2 << ")\">" << escape(y_label) << "</text>\n";

  // bands first so every line stays visible
  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    if (s.lo.empty() || s.x.empty()) continue;
    const char* color = kPalette[k % kPaletteSize];
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" "
           "stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      svg << px(sx(s.x[i])) << "," << px(sy(s.hi[i])) << " ";
    for (std::size_t i = s.x.size(); i-- > 0;)
      svg << px(sx(s.x[i])) << "," << px(sy(s.lo[i])) << " ";
    svg << "\"/>\n";
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    if (s.x.empty()) continue;
    const char* color = kPalette[k % kPaletteSize];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i)
      svg << px(sx(s.x[i])) << "," << px(sy(s.y[i])) << " ";
    svg << "\"/>\n";
  }

  // legend
  double ly = kMarginTop + 10;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kPalette[k % kPaletteSize];
    const double lx = kMarginLeft + 12;
    svg << "<line x1=\"" << px(lx) << "\" y1=\"" << px(ly) << "\" x2=\""
        << px(lx + 22) << "\" y2=\"" << px(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2.4\"/>\n";
    svg << "<text x=\"" << px(lx + 28) << "\" y=\"" << px(ly + 4)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#222\">"
        << escape(series[k].label) << "</text>\n";
    ly += 18;
  }
  svg << "</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << svg.str();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace marl
