#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace msd {

// Per-pixel class ids, row-major.
struct LabelGrid {
  LabelGrid() = default;
  LabelGrid(std::size_t height, std::size_t width, std::uint8_t fill = 0)
      : height(height), width(width), classes(height * width, fill) {}

  std::uint8_t& at(std::size_t h, std::size_t w) { return classes[h * width + w]; }
  std::uint8_t at(std::size_t h, std::size_t w) const { return classes[h * width + w]; }
  std::size_t size() const { return classes.size(); }

  bool operator==(const LabelGrid&) const = default;

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> classes;
};

}  // namespace msd
