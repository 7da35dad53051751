#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "msdlstm/core/label_grid.hpp"
#include "msdlstm/core/tensor.hpp"

namespace msd {

using Rgb = std::array<std::uint8_t, 3>;

// One color per precipitation class, NoRain first.
inline constexpr std::array<Rgb, 5> kClassPalette = {{
    {245, 245, 240},
    {158, 202, 225},
    {66, 146, 198},
    {8, 69, 148},
    {203, 24, 29},
}};

// Binary PPM (P6) images. Class grids use kClassPalette; real grids [1,H,W]
// are min-max scaled to grayscale, and a constant grid maps to black.
std::string class_grid_to_ppm(const LabelGrid& grid);
std::string real_grid_to_ppm(const Tensor& grid);

// Truth on the left, prediction on the right, separated by one black column.
std::string comparison_to_ppm(const LabelGrid& truth, const LabelGrid& prediction);

// Throws IoError naming the path when the file cannot be written.
void export_heatmap(const LabelGrid& grid, const std::filesystem::path& path);
void export_heatmap(const Tensor& grid, const std::filesystem::path& path);
void export_comparison(const LabelGrid& truth, const LabelGrid& prediction,
                       const std::filesystem::path& path);

}  // namespace msd
