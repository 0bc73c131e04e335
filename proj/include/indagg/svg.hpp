#pragma once

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace indagg::svg {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace detail

/// Line chart with y fixed to [y_min, 1]. Output depends only on the data.
inline void line_chart(std::ostream& os, const std::string& title, const std::string& x_label,
                       const std::vector<Series>& series, double y_min = 0.0) {
  const double width = 720, height = 420, left = 60, right = 170, top = 40, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double x_max = 1.0;
  for (const auto& s : series)
    for (double x : s.x) x_max = std::max(x_max, x);
  auto px = [&](double x) { return left + (x - 1.0) / std::max(x_max - 1.0, 1.0) * plot_w; };
  auto py = [&](double y) { return top + (1.0 - (std::clamp(y, y_min, 1.0) - y_min) / (1.0 - y_min)) * plot_h; };

  using detail::num;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(left) << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double y = y_min + (1.0 - y_min) * i / 5.0;
    os << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + plot_w) << "\" y1=\"" << num(py(y)) << "\" y2=\""
       << num(py(y)) << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">" << num(y)
       << "</text>\n";
  }
  os << "<line x1=\"" << num(left) << "\" x2=\"" << num(left) << "\" y1=\"" << num(top) << "\" y2=\""
     << num(top + plot_h) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << num(left) << "\" x2=\"" << num(left + plot_w) << "\" y1=\"" << num(top + plot_h)
     << "\" y2=\"" << num(top + plot_h) << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << num(left + plot_w / 2) << "\" y=\"" << num(height - 12) << "\" text-anchor=\"middle\">"
     << x_label << "</text>\n";
  os << "<text x=\"" << num(left + plot_w) << "\" y=\"" << num(top + plot_h + 16) << "\" text-anchor=\"end\">"
     << num(x_max) << "</text>\n";
  os << "<text x=\"" << num(left) << "\" y=\"" << num(top + plot_h + 16) << "\">1</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t j = 0; j < s.x.size(); ++j) os << (j ? " " : "") << num(px(s.x[j])) << ',' << num(py(s.y[j]));
    os << "\"/>\n";
    const double ly = top + 14.0 + 18.0 * static_cast<double>(i);
    os << "<line x1=\"" << num(left + plot_w + 12) << "\" x2=\"" << num(left + plot_w + 32) << "\" y1=\""
       << num(ly) << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(left + plot_w + 38) << "\" y=\"" << num(ly + 4) << "\">" << s.label << "</text>\n";
  }
  os << "</svg>\n";
}

}  // namespace indagg::svg
