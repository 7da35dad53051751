#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "msdlstm/core/autograd.hpp"
#include "msdlstm/core/random.hpp"
#include "msdlstm/core/tensor.hpp"

namespace msd {

enum class CellVariant : std::uint32_t {
  kConvLstm = 0,
  kFcConvLstm = 1,
  kSconvConvLstm = 2,
  kDeconstructedConvLstm = 3,
  kMsdConvLstm = 4,
};

inline constexpr std::array<CellVariant, 5> kAllVariants = {
    CellVariant::kConvLstm, CellVariant::kFcConvLstm, CellVariant::kSconvConvLstm,
    CellVariant::kDeconstructedConvLstm, CellVariant::kMsdConvLstm};

// Short CLI names: convlstm, fc, sconv, deconstructed, msd.
std::string_view variant_name(CellVariant v);
// Display names used in reports, e.g. "MSD-ConvLSTM".
std::string_view variant_title(CellVariant v);
std::optional<CellVariant> parse_variant(std::string_view name);

struct CellConfig {
  CellVariant variant = CellVariant::kMsdConvLstm;
  std::size_t kernel = 3;
  std::size_t input_channels = 0;
  std::size_t hidden_channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  // Throws ConfigError: kernel odd and >= 3, channel counts >= 1, spatial
  // extents >= 1, hidden channels divisible by 4 for the multi-scale variant.
  void validate() const;

  bool operator==(const CellConfig&) const = default;
};

// Kernel sizes and output channel counts of the small, middle and large
// multi-scale branches: (K-2, K, K+2) and (Ch/4, Ch/2, Ch/4).
std::array<std::size_t, 3> multiscale_kernels(std::size_t kernel);
std::array<std::size_t, 3> multiscale_channels(std::size_t hidden_channels);

// Pooling + fully connected path producing one value per hidden channel.
struct ChannelPath {
  Parameter input_weight;   // [Ch, Cx]
  Parameter hidden_weight;  // [Ch, Ch]
  Parameter bias;           // [Ch]
};

// Single-output-channel convolution producing one value per pixel. Only the
// spatial-only gate carries a (scalar) bias; the composed gates do not.
struct SpatialPath {
  Parameter input_weight;   // [1, Cx, K, K]
  Parameter hidden_weight;  // [1, Ch, K, K]
  std::optional<Parameter> bias;
};

// Full convolution pair.
struct ConvPath {
  Parameter input_weight;   // [Ch, Cx, K, K]
  Parameter hidden_weight;  // [Ch, Ch, K, K]
  Parameter bias;           // [Ch]
};

// Multi-scale convolution for the input-modulation gate, branches ordered
// small, middle, large.
struct MultiScaleConv {
  std::array<Parameter, 3> input_weights;
  std::array<Parameter, 3> hidden_weights;
  Parameter bias;  // [Ch]
};

struct GateParams {
  std::optional<ChannelPath> channel;
  std::optional<SpatialPath> spatial;
  std::optional<ConvPath> conv;
};

enum GateIndex : std::size_t { kInputGate = 0, kForgetGate = 1, kOutputGate = 2 };

struct CellParams {
  std::array<GateParams, 3> gates;  // input, forget, output
  std::optional<ConvPath> modulation;
  std::optional<MultiScaleConv> multiscale_modulation;

  // All parameters in serialization order: for gates i, f, o, then g, every
  // weight with x-weights before h-weights (channel path, spatial path, conv,
  // multi-scale branches small/middle/large), followed by every bias in the
  // same gate order.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

// Allocates the variant's tensors, all zero.
CellParams make_cell_params(const CellConfig& config);
// Xavier-uniform weights; forget-gate bias 1, other biases 0.
void initialize_cell_params(CellParams& params, const CellConfig& config, Rng& rng);
CellParams init_cell_params(const CellConfig& config, std::uint64_t seed);

struct CellState {
  Tensor hidden;  // [Ch, H, W]
  Tensor cell;    // [Ch, H, W]

  static CellState zeros(const CellConfig& config);
};

struct CellVars {
  Var hidden;
  Var cell;
};

// tanh of the multi-scale convolution of (x, h) plus bias.
Var mconv(Var x, Var h, MultiScaleConv& params, std::size_t kernel);

// One recurrent step recorded on the tape of `x`. Throws DimensionError on
// shape mismatch and NumericError naming the gate on non-finite values.
CellVars cell_step(const CellConfig& config, CellParams& params, Var x, CellVars state);

// Pure, non-recording step.
CellState cell_step(const CellConfig& config, const CellParams& params, const Tensor& x,
                    const CellState& state);

}  // namespace msd
