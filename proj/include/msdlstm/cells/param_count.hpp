#pragma once

#include <cstddef>
#include <cstdint>

#include "msdlstm/cells/cell.hpp"

namespace msd {

struct ParamCount {
  std::uint64_t weights = 0;
  std::uint64_t biases = 0;
};

// Closed-form weight count (biases excluded), with S = Cx + Ch:
//   ConvLSTM                K^2 * S * Ch * 4
//   FC-ConvLSTM             S * (3Ch + K^2 Ch)
//   sConv-ConvLSTM          S * (3K^2 + K^2 Ch)
//   Deconstructed-ConvLSTM  S * (3Ch + 3K^2 + K^2 Ch)
//   MSD-ConvLSTM            S * (K^2 (Ch + 3) + 5Ch)
// Throws ConfigError for configurations CellConfig::validate rejects.
std::uint64_t param_count_formula(CellVariant variant, std::size_t kernel,
                                  std::size_t input_channels, std::size_t hidden_channels);

// Sums the entries of every allocated tensor.
ParamCount param_count_enumerated(const CellParams& params);

}  // namespace msd
