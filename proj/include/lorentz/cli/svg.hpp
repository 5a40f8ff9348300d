#pragma once

// Minimal line-plot writer: axes, tick labels and one polyline per series.

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace lorentz::cli::svg {

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  std::vector<Series> series;
};

[[nodiscard]] std::string render(const Plot& plot);
void write(const Plot& plot, const std::filesystem::path& path);

}  // namespace lorentz::cli::svg
