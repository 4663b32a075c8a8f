#include "mgcoord/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "mgcoord/serialization.hpp"

namespace mgcoord {
namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string num(double v) {
  return format_number(std::round(v * 100.0) / 100.0);
}

}  // namespace

std::string render_log_chart(const std::vector<Series>& series, const ChartOptions& options) {
  const double left = 70, right = 160, top = 40, bottom = 50;
  const double pw = options.width - left - right;
  const double ph = options.height - top - bottom;

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      if (!(y > 0.0) || !std::isfinite(y) || !std::isfinite(x)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!std::isfinite(xmin)) {
    xmin = 0;
    xmax = 1;
    ymin = 1;
    ymax = 10;
  }
  if (xmax == xmin) xmax = xmin + 1;
  const double dlo = std::floor(std::log10(ymin));
  double dhi = std::ceil(std::log10(ymax));
  if (dhi == dlo) dhi = dlo + 1;

  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (dhi - std::log10(y)) / (dhi - dlo) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\"" << options.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty())
    out << "<text x=\"" << num(left + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(options.title) << "</text>\n";

  const int decades = static_cast<int>(dhi - dlo);
  const int stride = std::max(1, decades / 10);
  for (int e = static_cast<int>(dlo); e <= static_cast<int>(dhi); e += stride) {
    const double y = py(std::pow(10.0, e));
    out << "<line x1=\"" << num(left) << "\" y1=\"" << num(y) << "\" x2=\"" << num(left + pw) << "\" y2=\"" << num(y)
        << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  const int xticks = 5;
  for (int i = 0; i <= xticks; ++i) {
    const double xv = xmin + (xmax - xmin) * i / xticks;
    out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
        << num(xv) << "</text>\n";
  }
  out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(options.height - 12.0)
      << "\" text-anchor=\"middle\">" << escape(options.x_label) << "</text>\n";
  out << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(options.y_label) << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* colour = kPalette[i % kPalette.size()];
    std::ostringstream pts;
    bool any = false;
    for (const auto& [x, y] : series[i].points) {
      if (!(y > 0.0) || !std::isfinite(y) || !std::isfinite(x)) continue;
      pts << (any ? " " : "") << num(px(x)) << ',' << num(py(y));
      any = true;
    }
    if (any)
      out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"" << pts.str()
          << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(i) + 8;
    out << "<line x1=\"" << num(left + pw + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 30)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << num(left + pw + 34) << "\" y=\"" << num(ly + 4) << "\">" << escape(series[i].name)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace mgcoord
