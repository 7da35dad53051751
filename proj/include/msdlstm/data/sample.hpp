#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <vector>

#include "msdlstm/core/label_grid.hpp"
#include "msdlstm/core/tensor.hpp"

namespace msd {

// Input elements in their fixed order: relative humidity, air temperature and
// the two wind components.
enum Element : std::size_t { kHumidity = 0, kTemperature = 1, kWindU = 2, kWindV = 3 };
inline constexpr std::size_t kNumElements = 4;
inline constexpr std::array<std::string_view, kNumElements> kElementNames = {"R", "A", "U", "V"};

struct GridSequenceSample {
  std::size_t steps = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<Tensor> grids;  // steps * 4 fields of shape [1, H, W], step-major
  LabelGrid label;            // classes for the interval after the last step

  GridSequenceSample() = default;
  GridSequenceSample(std::size_t t, std::size_t h, std::size_t w, std::size_t label_h,
                     std::size_t label_w)
      : steps(t), height(h), width(w), grids(t * kNumElements, Tensor({1, h, w})),
        label(label_h, label_w) {}

  Tensor& grid(std::size_t t, std::size_t element) { return grids[t * kNumElements + element]; }
  const Tensor& grid(std::size_t t, std::size_t element) const {
    return grids[t * kNumElements + element];
  }

  bool operator==(const GridSequenceSample&) const = default;
};

}  // namespace msd
