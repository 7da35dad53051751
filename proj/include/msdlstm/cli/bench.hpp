#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "msdlstm/cells/cell.hpp"

namespace msd {

struct BenchResult {
  CellVariant variant;
  std::uint64_t parameters = 0;
  double mean_ms = 0;
  double stddev_ms = 0;
  std::size_t iterations = 0;
};

// Wall time of forward-only cell steps on random inputs, after `warmup`
// untimed steps. stddev is the sample standard deviation.
BenchResult bench_cell(const CellConfig& config, std::size_t warmup, std::size_t iterations,
                       std::uint64_t seed);

// True when parameter counts follow ConvLSTM > MSD > Deconstructed > FC >
// sConv. Rows may come in any order; missing variants are ignored.
bool count_ordering_holds(const std::vector<BenchResult>& rows);

}  // namespace msd
