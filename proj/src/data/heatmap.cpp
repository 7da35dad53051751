#include "msdlstm/data/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "msdlstm/core/errors.hpp"

namespace msd {
namespace {

std::string header(std::size_t w, std::size_t h) {
  return "P6 " + std::to_string(w) + " " + std::to_string(h) + " 255\n";
}

void write_file(const std::string& bytes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open image for writing", path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing image", path.string());
}

}  // namespace

std::string class_grid_to_ppm(const LabelGrid& grid) {
  std::string out = header(grid.width, grid.height);
  out.reserve(out.size() + 3 * grid.size());
  for (std::uint8_t c : grid.classes) {
    if (c >= kClassPalette.size())
      throw ValueError("class id " + std::to_string(c) + " has no palette color");
    for (std::uint8_t ch : kClassPalette[c]) out.push_back(static_cast<char>(ch));
  }
  return out;
}

std::string real_grid_to_ppm(const Tensor& grid) {
  if (grid.rank() != 3 || grid.channels() != 1)
    throw DimensionError("heatmap expects a [1,H,W] grid, got " + shape_string(grid.shape()));
  if (!grid.all_finite()) throw ValueError("heatmap grid contains non-finite values");
  const auto [lo, hi] = std::minmax_element(grid.data().begin(), grid.data().end());
  const double range = static_cast<double>(*hi) - static_cast<double>(*lo);
  std::string out = header(grid.width(), grid.height());
  out.reserve(out.size() + 3 * grid.size());
  for (Real v : grid.data()) {
    const double t = range > 0 ? (static_cast<double>(v) - *lo) / range : 0.0;
    const auto g = static_cast<char>(static_cast<std::uint8_t>(std::lround(255.0 * t)));
    out.append(3, g);
  }
  return out;
}

std::string comparison_to_ppm(const LabelGrid& truth, const LabelGrid& prediction) {
  if (truth.height != prediction.height || truth.width != prediction.width)
    throw DimensionError("comparison grids differ in size");
  const std::size_t w = 2 * truth.width + 1;
  std::string out = header(w, truth.height);
  for (std::size_t y = 0; y < truth.height; ++y) {
    for (const LabelGrid* g : {&truth, &prediction}) {
      for (std::size_t x = 0; x < g->width; ++x) {
        const std::uint8_t c = g->at(y, x);
        if (c >= kClassPalette.size())
          throw ValueError("class id " + std::to_string(c) + " has no palette color");
        for (std::uint8_t ch : kClassPalette[c]) out.push_back(static_cast<char>(ch));
      }
      if (g == &truth) out.append(3, '\0');
    }
  }
  return out;
}

void export_comparison(const LabelGrid& truth, const LabelGrid& prediction,
                       const std::filesystem::path& path) {
  write_file(comparison_to_ppm(truth, prediction), path);
}

void export_heatmap(const LabelGrid& grid, const std::filesystem::path& path) {
  write_file(class_grid_to_ppm(grid), path);
}

void export_heatmap(const Tensor& grid, const std::filesystem::path& path) {
  write_file(real_grid_to_ppm(grid), path);
}

}  // namespace msd
