#include "msdlstm/cli/bench.hpp"

#include <chrono>
#include <cmath>
#include <map>

#include "msdlstm/cells/param_count.hpp"
#include "msdlstm/core/random.hpp"

namespace msd {

BenchResult bench_cell(const CellConfig& config, std::size_t warmup, std::size_t iterations,
                       std::uint64_t seed) {
  const CellParams params = init_cell_params(config, seed);
  Rng rng = derive_rng(seed, 77);
  auto random_map = [&](std::size_t channels) {
    Tensor t({channels, config.height, config.width});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<Real>(uniform(rng, -1, 1));
    return t;
  };
  const Tensor x = random_map(config.input_channels);
  CellState state{random_map(config.hidden_channels), random_map(config.hidden_channels)};
  for (std::size_t i = 0; i < warmup; ++i) state = cell_step(config, params, x, state);

  std::vector<double> times;
  times.reserve(iterations);
  for (std::size_t i = 0; i < iterations; ++i) {
    const auto start = std::chrono::steady_clock::now();
    state = cell_step(config, params, x, state);
    times.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count());
  }
  BenchResult r{config.variant,
                param_count_formula(config.variant, config.kernel, config.input_channels,
                                    config.hidden_channels),
                0, 0, iterations};
  if (iterations == 0) return r;
  for (double t : times) r.mean_ms += t;
  r.mean_ms /= static_cast<double>(iterations);
  if (iterations > 1) {
    double ss = 0;
    for (double t : times) ss += (t - r.mean_ms) * (t - r.mean_ms);
    r.stddev_ms = std::sqrt(ss / static_cast<double>(iterations - 1));
  }
  return r;
}

bool count_ordering_holds(const std::vector<BenchResult>& rows) {
  static constexpr CellVariant kOrder[] = {
      CellVariant::kConvLstm, CellVariant::kMsdConvLstm, CellVariant::kDeconstructedConvLstm,
      CellVariant::kFcConvLstm, CellVariant::kSconvConvLstm};
  std::map<CellVariant, std::uint64_t> count;
  for (const auto& r : rows) count[r.variant] = r.parameters;
  const std::uint64_t* prev = nullptr;
  for (CellVariant v : kOrder) {
    auto it = count.find(v);
    if (it == count.end()) continue;
    if (prev && !(*prev > it->second)) return false;
    prev = &it->second;
  }
  return true;
}

}  // namespace msd
