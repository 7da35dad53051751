#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "msdlstm/core/label_grid.hpp"
#include "msdlstm/core/tensor.hpp"
#include "msdlstm/data/precip.hpp"
#include "msdlstm/data/sample.hpp"

namespace msd {

// Rainfall over the next interval as a smooth function of the current fields:
//   s    = humidity_weight * (q - humidity_threshold)
//        + front_weight * |grad A| + convergence_weight * (-(u dq/dx + v dq/dy))
//   rain = scale * softplus(sharpness * s) / sharpness
// Derivatives are periodic central differences in grid cells. The wind is
// divergence-free, so -(u dq/dx + v dq/dy) is the moisture flux convergence.
struct RainModel {
  double scale = 40.0;
  double sharpness = 8.0;
  double humidity_weight = 8.0;
  double humidity_threshold = 0.9;
  double front_weight = 0.5;
  double convergence_weight = 4.0;

  bool operator==(const RainModel&) const = default;
};

struct SyntheticParams {
  std::size_t steps = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  // Labels are block averages of rainfall over label_factor^2 cells.
  std::size_t label_factor = 2;
  ClassScheme scheme = ClassScheme::kFiveClass;

  double humidity_base = 0.3;
  std::size_t humidity_blobs_min = 3;
  std::size_t humidity_blobs_max = 5;
  double humidity_amplitude_min = 0.25;
  double humidity_amplitude_max = 0.55;
  double humidity_sigma_min = 5.0;   // cells, at a 32-cell reference grid
  double humidity_sigma_max = 9.0;
  std::size_t temperature_blobs = 3;
  double temperature_amplitude = 4.0;  // kelvin, signed uniform
  double temperature_sigma_min = 4.0;
  double temperature_sigma_max = 7.0;

  // Wind in cells per step: a uniform background drawn from
  // [-background_wind, background_wind] per component plus swirl_modes
  // Fourier modes of a stream function with speed amplitude up to swirl_wind
  // and integer wavenumbers up to swirl_wavenumber per direction.
  double background_wind = 3.5;
  double swirl_wind = 1.0;
  std::size_t swirl_modes = 3;
  std::size_t swirl_wavenumber = 1;

  RainModel rain;

  std::size_t label_height() const { return height / label_factor; }
  std::size_t label_width() const { return width / label_factor; }
  std::size_t num_classes() const { return scheme_classes(scheme); }
  // Throws ConfigError for steps < 2, grids smaller than 16x16, label
  // factors that do not divide the grid and inverted ranges.
  void validate() const;
};

struct Dataset {
  std::size_t steps = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t label_h = 0;
  std::size_t label_w = 0;
  std::size_t num_classes = 0;
  std::vector<GridSequenceSample> samples;

  bool operator==(const Dataset&) const = default;
};

// Semi-Lagrangian step: out(p) = field(p - (u, v)(p)) with periodic bilinear
// sampling. All tensors are [1, H, W].
Tensor advect(const Tensor& field, const Tensor& u, const Tensor& v);

Tensor rainfall(const RainModel& model, const Tensor& humidity, const Tensor& temperature,
                const Tensor& u, const Tensor& v);

// Block-averages rainfall by `factor` in each direction and bins it.
LabelGrid rain_to_labels(const Tensor& rain, std::size_t factor, ClassScheme scheme);

// Sample `index` of the dataset with this seed; each index draws from its own
// random stream so samples can be generated independently.
GridSequenceSample generate_sample(const SyntheticParams& params, std::uint64_t seed,
                                   std::size_t index);
Dataset generate_synthetic(const SyntheticParams& params, std::uint64_t seed,
                           std::size_t n_samples);

// Predicts that the next interval repeats the last observed one: the rain that
// fell over the last input step, recomputed from the fields one step earlier.
// Throws ConfigError for sequences shorter than two steps.
LabelGrid persistence_baseline(const GridSequenceSample& sample, const RainModel& model,
                               std::size_t label_factor, ClassScheme scheme);

}  // namespace msd
