#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace skeladapt::svg {

struct Series {
  std::string label;
  std::vector<double> x, y;
};

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                           "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

struct Frame {
  // plot area in page coordinates, y axis pointing up
  double x0 = 64, y0 = 396, x1 = 700, y1 = 40;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;

  double px(double x) const { return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0); }
  double py(double y) const { return y0 + (y - ymin) / (ymax - ymin) * (y1 - y0); }
};

inline void open_page(std::ostream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" "
         "font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"720\" height=\"440\" fill=\"white\"/>\n"
      << "<text x=\"360\" y=\"20\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
}

inline void axes(std::ostream& out, const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  out << "<rect x=\"" << f.x0 << "\" y=\"" << f.y1 << "\" width=\"" << f.x1 - f.x0 << "\" height=\"" << f.y0 - f.y1
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double tx = f.xmin + (f.xmax - f.xmin) * i / 4.0;
    const double ty = f.ymin + (f.ymax - f.ymin) * i / 4.0;
    out << "<line x1=\"" << f.px(tx) << "\" y1=\"" << f.y0 << "\" x2=\"" << f.px(tx) << "\" y2=\"" << f.y0 + 4
        << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << f.px(tx) << "\" y=\"" << f.y0 + 16 << "\" text-anchor=\"middle\">" << fmt(tx)
        << "</text>\n"
        << "<line x1=\"" << f.x0 - 4 << "\" y1=\"" << f.py(ty) << "\" x2=\"" << f.x0 << "\" y2=\"" << f.py(ty)
        << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << f.x0 - 7 << "\" y=\"" << f.py(ty) + 4 << "\" text-anchor=\"end\">" << fmt(ty)
        << "</text>\n";
  }
  out << "<text x=\"" << (f.x0 + f.x1) / 2 << "\" y=\"432\" text-anchor=\"middle\">" << xlabel << "</text>\n"
      << "<text x=\"14\" y=\"" << (f.y0 + f.y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << (f.y0 + f.y1) / 2 << ")\">" << ylabel << "</text>\n";
}

}  // namespace detail

inline void write_line_chart(const std::filesystem::path& file, const std::string& title, const std::string& xlabel,
                             const std::string& ylabel, const std::vector<Series>& series) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write plot: " + file.string());
  detail::Frame f;
  f.xmin = f.ymin = 1e300;
  f.xmax = f.ymax = -1e300;
  for (const Series& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      f.xmin = std::min(f.xmin, s.x[i]);
      f.xmax = std::max(f.xmax, s.x[i]);
      f.ymin = std::min(f.ymin, s.y[i]);
      f.ymax = std::max(f.ymax, s.y[i]);
    }
  if (f.xmin > f.xmax) f.xmin = 0, f.xmax = 1;
  if (f.ymin > f.ymax) f.ymin = 0, f.ymax = 1;
  if (f.xmax == f.xmin) f.xmax = f.xmin + 1;
  if (f.ymax == f.ymin) f.ymax = f.ymin + 1;
  const double pad = 0.05 * (f.ymax - f.ymin);
  f.ymin -= pad;
  f.ymax += pad;

  detail::open_page(out, title);
  detail::axes(out, f, xlabel, ylabel);
  for (size_t si = 0; si < series.size(); ++si) {
    const Series& s = series[si];
    if (s.x.empty()) continue;
    const char* color = kPalette[si % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i) out << f.px(s.x[i]) << "," << f.py(s.y[i]) << " ";
    out << "\"/>\n";
    out << "<line x1=\"" << f.x1 - 150 << "\" y1=\"" << f.y1 + 14 + 16 * si << "\" x2=\"" << f.x1 - 130 << "\" y2=\""
        << f.y1 + 14 + 16 * si << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << f.x1 - 124 << "\" y=\"" << f.y1 + 18 + 16 * si << "\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

inline void write_bar_chart(const std::filesystem::path& file, const std::string& title, const std::string& ylabel,
                            const std::vector<std::pair<std::string, double>>& bars) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write plot: " + file.string());
  detail::Frame f;
  f.xmin = 0;
  f.xmax = double(std::max<size_t>(bars.size(), 1));
  f.ymin = 0;
  f.ymax = 1e-9;
  for (const auto& [_, v] : bars) f.ymax = std::max(f.ymax, v);
  f.ymax *= 1.1;

  detail::open_page(out, title);
  out << "<rect x=\"" << f.x0 << "\" y=\"" << f.y1 << "\" width=\"" << f.x1 - f.x0 << "\" height=\"" << f.y0 - f.y1
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double ty = f.ymax * i / 4.0;
    out << "<line x1=\"" << f.x0 - 4 << "\" y1=\"" << f.py(ty) << "\" x2=\"" << f.x0 << "\" y2=\"" << f.py(ty)
        << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << f.x0 - 7 << "\" y=\"" << f.py(ty) + 4 << "\" text-anchor=\"end\">" << detail::fmt(ty)
        << "</text>\n";
  }
  for (size_t i = 0; i < bars.size(); ++i) {
    const double cx = f.px(double(i) + 0.5);
    const double w = 0.6 * (f.px(1) - f.px(0));
    const double top = f.py(bars[i].second);
    out << "<rect x=\"" << cx - w / 2 << "\" y=\"" << top << "\" width=\"" << w << "\" height=\"" << f.y0 - top
        << "\" fill=\"" << kPalette[i % std::size(kPalette)] << "\"/>\n"
        << "<text x=\"" << cx << "\" y=\"" << top - 5 << "\" text-anchor=\"middle\">" << detail::fmt(bars[i].second)
        << "</text>\n"
        << "<text x=\"" << cx << "\" y=\"" << f.y0 + 16 << "\" text-anchor=\"middle\">" << bars[i].first
        << "</text>\n";
  }
  out << "<text x=\"14\" y=\"" << (f.y0 + f.y1) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << (f.y0 + f.y1) / 2 << ")\">" << ylabel << "</text>\n</svg>\n";
}

}  // namespace skeladapt::svg
