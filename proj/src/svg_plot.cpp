#include "svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace saddleopt::svg {

namespace {

constexpr double kWidth = 840.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 48.0;
constexpr double kBottom = 64.0;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void expand(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

double transform(double v, bool log_scale) { return log_scale ? std::log10(v) : v; }

}  // namespace

void write_chart(const Chart& chart, const std::string& path) {
  // Collect transformed points and the plot ranges first.
  std::vector<std::vector<std::pair<double, double>>> lines;
  Range xr, yr;
  for (const Series& s : chart.series) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [x, y] : s.points) {
      if (chart.log_x && !(x > 0.0)) continue;
      if (chart.log_y && !(y > 0.0)) continue;
      const double tx = transform(x, chart.log_x);
      const double ty = transform(y, chart.log_y);
      if (!std::isfinite(tx) || !std::isfinite(ty)) continue;
      xr.expand(tx);
      yr.expand(ty);
      pts.emplace_back(tx, ty);
    }
    lines.push_back(std::move(pts));
  }
  if (chart.hline && !chart.log_y) yr.expand(*chart.hline);
  if (!(xr.lo <= xr.hi) || !(yr.lo <= yr.hi))
    throw std::runtime_error("write_chart: nothing to plot");
  if (xr.lo == xr.hi) {
    xr.lo -= 0.5;
    xr.hi += 0.5;
  }
  if (yr.lo == yr.hi) {
    yr.lo -= 0.5;
    yr.hi += 0.5;
  }

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * plot_w; };
  auto sy = [&](double v) { return kTop + (yr.hi - v) / (yr.hi - yr.lo) * plot_h; };

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_chart: cannot open " + path);

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" font-size=\"16\" text-anchor=\"middle\""
      << " font-family=\"sans-serif\">" << chart.title << "</text>\n";

  // frame
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#444\"/>\n";

  // ticks
  constexpr int kTicks = 5;
  for (int i = 0; i <= kTicks; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / kTicks;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / kTicks;
    const double px = sx(fx);
    const double py = sy(fy);
    const double label_x = chart.log_x ? std::pow(10.0, fx) : fx;
    const double label_y = chart.log_y ? std::pow(10.0, fy) : fy;
    out << "<line x1=\"" << px << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << px
        << "\" y2=\"" << kTop + plot_h + 5 << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << px << "\" y=\"" << kTop + plot_h + 20
        << "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">"
        << fmt(label_x) << "</text>\n";
    out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << py << "\" x2=\"" << kLeft
        << "\" y2=\"" << py << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"" << kLeft - 8 << "\" y=\"" << py + 4
        << "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">"
        << fmt(label_y) << "</text>\n";
  }
  out << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 16
      << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\">"
      << chart.x_label << "</text>\n";
  out << "<text x=\"18\" y=\"" << kTop + plot_h / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" font-family=\"sans-serif\""
      << " transform=\"rotate(-90 18 " << kTop + plot_h / 2 << ")\">" << chart.y_label
      << "</text>\n";

  if (chart.hline) {
    const double hv = transform(*chart.hline, chart.log_y);
    if (std::isfinite(hv) && hv >= yr.lo && hv <= yr.hi)
      out << "<line x1=\"" << kLeft << "\" y1=\"" << sy(hv) << "\" x2=\""
          << kLeft + plot_w << "\" y2=\"" << sy(hv)
          << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }

  for (std::size_t si = 0; si < chart.series.size(); ++si) {
    const Series& s = chart.series[si];
    const auto& pts = lines[si];
    if (pts.size() > 1) {
      out << "<polyline fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"1.5\" points=\"";
      for (const auto& [x, y] : pts) out << fmt(sx(x)) << "," << fmt(sy(y)) << " ";
      out << "\"/>\n";
    }
    if (s.markers || pts.size() == 1) {
      for (const auto& [x, y] : pts)
        out << "<circle cx=\"" << fmt(sx(x)) << "\" cy=\"" << fmt(sy(y))
            << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
    }
    // legend entry
    const double ly = kTop + 16.0 + 16.0 * static_cast<double>(si);
    out << "<line x1=\"" << kLeft + plot_w - 150 << "\" y1=\"" << ly << "\" x2=\""
        << kLeft + plot_w - 126 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kLeft + plot_w - 120 << "\" y=\"" << ly + 4
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.label << "</text>\n";
  }

  double ay = kTop + plot_h - 10.0;
  for (const std::string& note : chart.annotations) {
    out << "<text x=\"" << kLeft + 10 << "\" y=\"" << ay
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << note << "</text>\n";
    ay -= 16.0;
  }
  out << "</svg>\n";
  if (!out) throw std::runtime_error("write_chart: write failed for " + path);
}

}  // namespace saddleopt::svg
