#include "lorentz/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lorentz::cli::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

}  // namespace

std::string render(const Plot& plot) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  auto tx = [&](double x) { return plot.log_x ? std::log10(x) : x; };
  for (const auto& s : plot.series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(y) || (plot.log_x && x <= 0.0)) continue;
      x0 = std::min(x0, tx(x));
      x1 = std::max(x1, tx(x));
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (!std::isfinite(x0)) x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5 * std::max(1.0, std::abs(y0)), y1 += 0.5 * std::max(1.0, std::abs(y1));
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (tx(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream out;
  out << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kWidth << R"(" height=")" << kHeight
      << R"(" font-family="sans-serif" font-size="12">)" << '\n';
  out << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
  out << R"(<text x=")" << kWidth / 2 << R"(" y="22" text-anchor="middle" font-size="15">)" << escape(plot.title)
      << "</text>\n";
  out << R"(<line x1=")" << kLeft << R"(" y1=")" << kTop + ph << R"(" x2=")" << kLeft + pw << R"(" y2=")"
      << kTop + ph << R"(" stroke="black"/>)" << '\n';
  out << R"(<line x1=")" << kLeft << R"(" y1=")" << kTop << R"(" x2=")" << kLeft << R"(" y2=")" << kTop + ph
      << R"(" stroke="black"/>)" << '\n';
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double fy = y0 + (y1 - y0) * i / 4.0;
    const double sx = kLeft + pw * i / 4.0;
    const double sy = kTop + ph - ph * i / 4.0;
    out << R"(<text x=")" << sx << R"(" y=")" << kTop + ph + 16 << R"(" text-anchor="middle">)"
        << fmt(plot.log_x ? std::pow(10.0, fx) : fx) << "</text>\n";
    out << R"(<text x=")" << kLeft - 6 << R"(" y=")" << sy + 4 << R"(" text-anchor="end">)" << fmt(fy) << "</text>\n";
  }
  out << R"(<text x=")" << kLeft + pw / 2 << R"(" y=")" << kHeight - 10 << R"(" text-anchor="middle">)"
      << escape(plot.x_label) << "</text>\n";
  out << R"(<text x="16" y=")" << kTop + ph / 2 << R"(" text-anchor="middle" transform="rotate(-90 16 )"
      << kTop + ph / 2 << ")\">" << escape(plot.y_label) << "</text>\n";

  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = kColors[k % std::size(kColors)];
    out << R"(<polyline fill="none" stroke=")" << color << R"(" stroke-width="1.5" points=")";
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(y) || (plot.log_x && x <= 0.0)) continue;
      out << fmt(px(x)) << ',' << fmt(py(y)) << ' ';
    }
    out << "\"/>\n";
    out << R"(<text x=")" << kLeft + pw - 4 << R"(" y=")" << kTop + 14 + 14 * static_cast<double>(k)
        << R"(" text-anchor="end" fill=")" << color << R"(">)" << escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write(const Plot& plot, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << render(plot);
}

}  // namespace lorentz::cli::svg
