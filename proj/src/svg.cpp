#include "edl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "edl/csv.hpp"

namespace edl::svg {
namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 160;
constexpr double kTop = 40;
constexpr double kBottom = 60;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
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

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

struct Frame {
  double x0, x1, y0, y1;
  bool log_x;

  double px(double x) const {
    const double t = log_x ? (std::log10(x) - std::log10(x0)) / (std::log10(x1) - std::log10(x0))
                           : (x - x0) / (x1 - x0);
    return kLeft + t * (kWidth - kLeft - kRight);
  }
  double py(double y) const { return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom); }
};

void header(std::ostringstream& s, const ChartOptions& o) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(o.title) << "</text>\n";
  s << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 15
    << "\" text-anchor=\"middle\">" << escape(o.x_label) << "</text>\n";
  s << "<text x=\"18\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
    << kHeight / 2 << ")\">" << escape(o.y_label) << "</text>\n";
}

void axes(std::ostringstream& s, const Frame& f) {
  const double bx = kHeight - kBottom;
  s << "<line x1=\"" << kLeft << "\" y1=\"" << bx << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << bx
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << bx
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    s << "<text x=\"" << kLeft - 6 << "\" y=\"" << f.py(y) + 4 << "\" text-anchor=\"end\">" << fmt(y)
      << "</text>\n";
  }
}

std::pair<double, double> padded(double lo, double hi) {
  if (!(hi > lo)) {
    const double pad = std::max(std::abs(lo) * 0.1, 1e-3);
    return {lo - pad, hi + pad};
  }
  const double pad = 0.05 * (hi - lo);
  return {lo - pad, hi + pad};
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& options) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& se : series) {
    for (const auto& [x, y] : se.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  const bool log_x = options.log_x && x0 > 0.0;
  if (x1 <= x0) x1 = log_x ? x0 * 10 : x0 + 1;
  const auto [ya, yb] = padded(y0, y1);
  Frame f{x0, x1, ya, yb, log_x};

  std::ostringstream s;
  header(s, options);
  axes(s, f);
  std::vector<double> xs;
  for (const auto& se : series) {
    for (const auto& p : se.points) xs.push_back(p.first);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double x : xs) {
    s << "<text x=\"" << f.px(x) << "\" y=\"" << kHeight - kBottom + 18
      << "\" text-anchor=\"middle\">" << fmt(x) << "</text>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % std::size(kPalette)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : series[i].points) {
      if (std::isfinite(y)) s << f.px(x) << ',' << f.py(y) << ' ';
    }
    s << "\"/>\n";
    for (const auto& [x, y] : series[i].points) {
      if (std::isfinite(y)) {
        s << "<circle cx=\"" << f.px(x) << "\" cy=\"" << f.py(y) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
      }
    }
    const double ly = kTop + 18.0 * static_cast<double>(i);
    s << "<rect x=\"" << kWidth - kRight + 12 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\""
      << color << "\"/>\n";
    s << "<text x=\"" << kWidth - kRight + 30 << "\" y=\"" << ly + 10 << "\">"
      << escape(series[i].name) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string bar_chart(const std::vector<std::pair<std::string, double>>& bars,
                      const ChartOptions& options) {
  double lo = 0.0, hi = 0.0;
  for (const auto& [_, v] : bars) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const auto [ya, yb] = padded(lo, hi);
  Frame f{0.0, 1.0, ya, yb, false};
  std::ostringstream s;
  header(s, options);
  axes(s, f);
  const double span = kWidth - kLeft - kRight;
  const double slot = bars.empty() ? span : span / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double v = std::isfinite(bars[i].second) ? bars[i].second : 0.0;
    const double x = kLeft + slot * (static_cast<double>(i) + 0.15);
    const double top = f.py(std::max(v, 0.0));
    const double bottom = f.py(std::min(v, 0.0));
    s << "<rect x=\"" << x << "\" y=\"" << top << "\" width=\"" << slot * 0.7 << "\" height=\""
      << bottom - top << "\" fill=\"" << kPalette[i % std::size(kPalette)] << "\"/>\n";
    s << "<text x=\"" << x + slot * 0.35 << "\" y=\"" << kHeight - kBottom + 18
      << "\" text-anchor=\"middle\" font-size=\"10\">" << escape(bars[i].first) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace edl::svg
