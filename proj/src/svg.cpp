#include "shapematch/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "shapematch/errors.hpp"

namespace shapematch {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kMarginL = 70, kMarginR = 20, kMarginT = 40, kMarginB = 50;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

struct Range {
  double lo = 0.0, hi = 1.0;
  double map(double v, double pix_lo, double pix_hi) const {
    const double t = hi > lo ? (v - lo) / (hi - lo) : 0.5;
    return pix_lo + t * (pix_hi - pix_lo);
  }
};

void write_axes(std::ostream& out, const std::string& title, const std::string& x_label,
                const std::string& y_label, const Range& xr, const Range& yr) {
  out << "<rect x='" << kMarginL << "' y='" << kMarginT << "' width='"
      << (kWidth - kMarginL - kMarginR) << "' height='" << (kHeight - kMarginT - kMarginB)
      << "' fill='none' stroke='#888'/>\n";
  out << "<text x='" << kWidth / 2 << "' y='22' text-anchor='middle' font-size='15'>" << title
      << "</text>\n";
  out << "<text x='" << kWidth / 2 << "' y='" << kHeight - 10
      << "' text-anchor='middle' font-size='12'>" << x_label << "</text>\n";
  out << "<text x='16' y='" << kHeight / 2 << "' text-anchor='middle' font-size='12' "
      << "transform='rotate(-90 16 " << kHeight / 2 << ")'>" << y_label << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = static_cast<double>(i) / 4.0;
    const double xv = xr.lo + t * (xr.hi - xr.lo);
    const double yv = yr.lo + t * (yr.hi - yr.lo);
    const double xp = kMarginL + t * (kWidth - kMarginL - kMarginR);
    const double yp = kHeight - kMarginB - t * (kHeight - kMarginT - kMarginB);
    out << "<text x='" << xp << "' y='" << kHeight - kMarginB + 16
        << "' text-anchor='middle' font-size='10'>" << fmt(xv) << "</text>\n";
    out << "<text x='" << kMarginL - 6 << "' y='" << yp + 3
        << "' text-anchor='end' font-size='10'>" << fmt(yv) << "</text>\n";
  }
}

}  // namespace

void svg_line_chart(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write SVG: " + path);

  Range xr{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  Range yr = xr;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xr.lo = std::min(xr.lo, x);
      xr.hi = std::max(xr.hi, x);
      yr.lo = std::min(yr.lo, y);
      yr.hi = std::max(yr.hi, y);
    }
  if (!std::isfinite(xr.lo)) xr = {0, 1};
  if (!std::isfinite(yr.lo)) yr = {0, 1};
  if (xr.lo == xr.hi) xr.hi = xr.lo + 1;
  if (yr.lo == yr.hi) yr.hi = yr.lo + 1;

  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  write_axes(out, title, x_label, y_label, xr, yr);
  int legend_row = 0;
  for (const auto& s : series) {
    out << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
    for (const auto& [x, y] : s.points)
      out << fmt(xr.map(x, kMarginL, kWidth - kMarginR)) << ','
          << fmt(yr.map(y, kHeight - kMarginB, kMarginT)) << ' ';
    out << "'/>\n";
    const double ly = kMarginT + 14 + 16 * legend_row++;
    out << "<line x1='" << kWidth - 170 << "' y1='" << ly << "' x2='" << kWidth - 150 << "' y2='"
        << ly << "' stroke='" << s.color << "' stroke-width='2'/>\n";
    out << "<text x='" << kWidth - 145 << "' y='" << ly + 4 << "' font-size='11'>" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

void svg_bar_chart(const std::string& path, const std::string& title,
                   const std::vector<std::string>& group_labels,
                   const std::vector<SvgBarSeries>& series) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write SVG: " + path);
  double hi = 0.0;
  for (const auto& s : series)
    for (double v : s.values) hi = std::max(hi, v);
  if (hi <= 0.0) hi = 1.0;
  const Range yr{0.0, hi * 1.05};

  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << kHeight
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  write_axes(out, title, "", "value", Range{0, 1}, yr);

  const auto groups = group_labels.size();
  const double span = (kWidth - kMarginL - kMarginR) / std::max<std::size_t>(groups, 1);
  const double bar_w = span * 0.8 / std::max<std::size_t>(series.size(), 1);
  for (std::size_t g = 0; g < groups; ++g) {
    const double x0 = kMarginL + static_cast<double>(g) * span + span * 0.1;
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (g >= series[s].values.size()) continue;
      const double v = series[s].values[g];
      const double y = yr.map(v, kHeight - kMarginB, kMarginT);
      out << "<rect x='" << fmt(x0 + static_cast<double>(s) * bar_w) << "' y='" << fmt(y)
          << "' width='" << fmt(bar_w * 0.92) << "' height='"
          << fmt(kHeight - kMarginB - y) << "' fill='" << series[s].color << "'/>\n";
    }
    out << "<text x='" << fmt(x0 + span * 0.4) << "' y='" << kHeight - kMarginB + 16
        << "' text-anchor='middle' font-size='10'>" << group_labels[g] << "</text>\n";
  }
  int legend_row = 0;
  for (const auto& s : series) {
    const double ly = kMarginT + 14 + 16 * legend_row++;
    out << "<rect x='" << kWidth - 170 << "' y='" << ly - 8 << "' width='12' height='12' fill='"
        << s.color << "'/>\n";
    out << "<text x='" << kWidth - 152 << "' y='" << ly + 2 << "' font-size='11'>" << s.label
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace shapematch
