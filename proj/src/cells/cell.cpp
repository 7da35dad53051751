#include "msdlstm/cells/cell.hpp"

#include <string>
#include <utility>

#include "msdlstm/core/errors.hpp"
#include "msdlstm/core/ops.hpp"

namespace msd {
namespace {

constexpr std::array<const char*, 3> kGateNames = {"input", "forget", "output"};

Parameter weight(std::string name, Shape shape) {
  return Parameter(std::move(name), Tensor(std::move(shape)), ParamKind::kWeight);
}

Parameter bias(std::string name, std::size_t n) {
  return Parameter(std::move(name), Tensor({n}), ParamKind::kBias);
}

ConvPath make_conv_path(const std::string& prefix, const CellConfig& c) {
  const std::size_t k = c.kernel;
  return ConvPath{weight(prefix + ".conv.wx", {c.hidden_channels, c.input_channels, k, k}),
                  weight(prefix + ".conv.wh", {c.hidden_channels, c.hidden_channels, k, k}),
                  bias(prefix + ".conv.b", c.hidden_channels)};
}

ChannelPath make_channel_path(const std::string& prefix, const CellConfig& c) {
  return ChannelPath{weight(prefix + ".channel.wx", {c.hidden_channels, c.input_channels}),
                     weight(prefix + ".channel.wh", {c.hidden_channels, c.hidden_channels}),
                     bias(prefix + ".channel.b", c.hidden_channels)};
}

SpatialPath make_spatial_path(const std::string& prefix, const CellConfig& c, bool with_bias) {
  const std::size_t k = c.kernel;
  SpatialPath p{weight(prefix + ".spatial.wx", {1, c.input_channels, k, k}),
                weight(prefix + ".spatial.wh", {1, c.hidden_channels, k, k}), std::nullopt};
  if (with_bias) p.bias = bias(prefix + ".spatial.b", 1);
  return p;
}

template <typename Params, typename Param>
void collect(Params& params, std::vector<Param*>& out) {
  std::vector<Param*> biases;
  for (auto& g : params.gates) {
    if (g.channel) {
      out.push_back(&g.channel->input_weight);
      out.push_back(&g.channel->hidden_weight);
      biases.push_back(&g.channel->bias);
    }
    if (g.spatial) {
      out.push_back(&g.spatial->input_weight);
      out.push_back(&g.spatial->hidden_weight);
      if (g.spatial->bias) biases.push_back(&*g.spatial->bias);
    }
    if (g.conv) {
      out.push_back(&g.conv->input_weight);
      out.push_back(&g.conv->hidden_weight);
      biases.push_back(&g.conv->bias);
    }
  }
  if (params.modulation) {
    out.push_back(&params.modulation->input_weight);
    out.push_back(&params.modulation->hidden_weight);
    biases.push_back(&params.modulation->bias);
  }
  if (params.multiscale_modulation) {
    for (auto& w : params.multiscale_modulation->input_weights) out.push_back(&w);
    for (auto& w : params.multiscale_modulation->hidden_weights) out.push_back(&w);
    biases.push_back(&params.multiscale_modulation->bias);
  }
  out.insert(out.end(), biases.begin(), biases.end());
}

void xavier(Parameter& p, Rng& rng) {
  const Shape& s = p.value.shape();
  if (s.size() == 4) {
    const std::size_t area = s[2] * s[3];
    xavier_uniform(p.value, s[1] * area, s[0] * area, rng);
  } else {
    xavier_uniform(p.value, s[1], s[0], rng);
  }
}

void check_state(const CellConfig& c, const Tensor& x, const Tensor& h, const Tensor& cell) {
  const Shape xs{c.input_channels, c.height, c.width};
  const Shape hs{c.hidden_channels, c.height, c.width};
  if (x.shape() != xs) {
    throw DimensionError("cell_step: input " + shape_string(x.shape()) + ", expected " +
                         shape_string(xs));
  }
  if (h.shape() != hs || cell.shape() != hs) {
    throw DimensionError("cell_step: state " + shape_string(h.shape()) + "/" +
                         shape_string(cell.shape()) + ", expected " + shape_string(hs));
  }
}

// Runs `fn`, re-raising numeric failures with the gate name attached.
template <typename Fn>
Var in_gate(const char* gate, Fn&& fn) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError(e.op(), std::string(gate) + " gate");
  }
}

struct StepInputs {
  Var x, h;
  Var x_pool, h_pool;  // only for variants with a channel path
  Var ones_map, ones_vec;
};

Var conv_sum(Var x, Var h, Parameter& wx, Parameter& wh) {
  Tape& t = x.tape();
  return ops::add(ops::conv2d(x, t.parameter(wx)), ops::conv2d(h, t.parameter(wh)));
}

Var channel_logits(const StepInputs& in, ChannelPath& p) {
  Tape& t = in.x.tape();
  return ops::add(ops::fully_connected(in.x_pool, t.parameter(p.input_weight), t.parameter(p.bias)),
                  ops::fully_connected(in.h_pool, t.parameter(p.hidden_weight)));
}

Var gate_value(CellVariant variant, GateParams& g, const StepInputs& in) {
  Tape& t = in.x.tape();
  switch (variant) {
    case CellVariant::kConvLstm:
      return ops::sigmoid(ops::add_channel_bias(
          conv_sum(in.x, in.h, g.conv->input_weight, g.conv->hidden_weight),
          t.parameter(g.conv->bias)));
    case CellVariant::kFcConvLstm:
      return ops::hadamard_broadcast(ops::sigmoid(channel_logits(in, *g.channel)), in.ones_map);
    case CellVariant::kSconvConvLstm:
      return ops::hadamard_broadcast(
          in.ones_vec,
          ops::sigmoid(ops::add_channel_bias(
              conv_sum(in.x, in.h, g.spatial->input_weight, g.spatial->hidden_weight),
              t.parameter(*g.spatial->bias))));
    case CellVariant::kDeconstructedConvLstm:
    case CellVariant::kMsdConvLstm:
      return ops::sigmoid(ops::hadamard_broadcast(
          channel_logits(in, *g.channel),
          conv_sum(in.x, in.h, g.spatial->input_weight, g.spatial->hidden_weight)));
  }
  throw ConfigError("unknown cell variant");
}

}  // namespace

std::string_view variant_name(CellVariant v) {
  switch (v) {
    case CellVariant::kConvLstm: return "convlstm";
    case CellVariant::kFcConvLstm: return "fc";
    case CellVariant::kSconvConvLstm: return "sconv";
    case CellVariant::kDeconstructedConvLstm: return "deconstructed";
    case CellVariant::kMsdConvLstm: return "msd";
  }
  return "unknown";
}

std::string_view variant_title(CellVariant v) {
  switch (v) {
    case CellVariant::kConvLstm: return "ConvLSTM";
    case CellVariant::kFcConvLstm: return "FC-ConvLSTM";
    case CellVariant::kSconvConvLstm: return "sConv-ConvLSTM";
    case CellVariant::kDeconstructedConvLstm: return "Deconstructed-ConvLSTM";
    case CellVariant::kMsdConvLstm: return "MSD-ConvLSTM";
  }
  return "unknown";
}

std::optional<CellVariant> parse_variant(std::string_view name) {
  for (CellVariant v : kAllVariants)
    if (variant_name(v) == name) return v;
  return std::nullopt;
}

void CellConfig::validate() const {
  if (static_cast<std::uint32_t>(variant) > 4) throw ConfigError("unknown cell variant");
  if (kernel < 3 || kernel % 2 == 0) {
    throw ConfigError("kernel size must be odd and >= 3, got " + std::to_string(kernel));
  }
  if (input_channels == 0) throw ConfigError("input channels must be >= 1");
  if (hidden_channels == 0) throw ConfigError("hidden channels must be >= 1");
  if (height == 0 || width == 0) throw ConfigError("spatial extents must be >= 1");
  if (variant == CellVariant::kMsdConvLstm && hidden_channels % 4 != 0) {
    throw ConfigError("MSD-ConvLSTM needs hidden channels divisible by 4, got " +
                      std::to_string(hidden_channels));
  }
}

std::array<std::size_t, 3> multiscale_kernels(std::size_t kernel) {
  return {kernel - 2, kernel, kernel + 2};
}

std::array<std::size_t, 3> multiscale_channels(std::size_t hidden_channels) {
  return {hidden_channels / 4, hidden_channels / 2, hidden_channels / 4};
}

std::vector<Parameter*> CellParams::parameters() {
  std::vector<Parameter*> out;
  collect(*this, out);
  return out;
}

std::vector<const Parameter*> CellParams::parameters() const {
  std::vector<const Parameter*> out;
  collect(*this, out);
  return out;
}

CellParams make_cell_params(const CellConfig& c) {
  c.validate();
  CellParams p;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string prefix = std::string("cell.") + kGateNames[i];
    GateParams& g = p.gates[i];
    switch (c.variant) {
      case CellVariant::kConvLstm: g.conv = make_conv_path(prefix, c); break;
      case CellVariant::kFcConvLstm: g.channel = make_channel_path(prefix, c); break;
      case CellVariant::kSconvConvLstm: g.spatial = make_spatial_path(prefix, c, true); break;
      case CellVariant::kDeconstructedConvLstm:
      case CellVariant::kMsdConvLstm:
        g.channel = make_channel_path(prefix, c);
        g.spatial = make_spatial_path(prefix, c, false);
        break;
    }
  }
  if (c.variant == CellVariant::kMsdConvLstm) {
    MultiScaleConv m;
    const auto kernels = multiscale_kernels(c.kernel);
    const auto channels = multiscale_channels(c.hidden_channels);
    constexpr std::array<const char*, 3> branch = {"small", "middle", "large"};
    for (std::size_t b = 0; b < 3; ++b) {
      m.input_weights[b] = weight(std::string("cell.modulation.") + branch[b] + ".wx",
                                  {channels[b], c.input_channels, kernels[b], kernels[b]});
      m.hidden_weights[b] = weight(std::string("cell.modulation.") + branch[b] + ".wh",
                                   {channels[b], c.hidden_channels, kernels[b], kernels[b]});
    }
    m.bias = bias("cell.modulation.b", c.hidden_channels);
    p.multiscale_modulation = std::move(m);
  } else {
    p.modulation = make_conv_path("cell.modulation", c);
  }
  return p;
}

void initialize_cell_params(CellParams& params, const CellConfig&, Rng& rng) {
  for (Parameter* p : params.parameters()) {
    if (p->kind == ParamKind::kWeight) {
      xavier(*p, rng);
    } else {
      p->value.fill(Real(0));
    }
  }
  GateParams& forget = params.gates[kForgetGate];
  if (forget.channel) forget.channel->bias.value.fill(Real(1));
  if (forget.conv) forget.conv->bias.value.fill(Real(1));
  if (forget.spatial && forget.spatial->bias) forget.spatial->bias->value.fill(Real(1));
}

CellParams init_cell_params(const CellConfig& config, std::uint64_t seed) {
  CellParams p = make_cell_params(config);
  Rng rng = derive_rng(seed, 0);
  initialize_cell_params(p, config, rng);
  return p;
}

CellState CellState::zeros(const CellConfig& c) {
  return CellState{Tensor({c.hidden_channels, c.height, c.width}),
                   Tensor({c.hidden_channels, c.height, c.width})};
}

Var mconv(Var x, Var h, MultiScaleConv& params, std::size_t kernel) {
  Tape& t = x.tape();
  const auto kernels = multiscale_kernels(kernel);
  std::array<Var, 3> xs, hs;
  for (std::size_t b = 0; b < 3; ++b) {
    if (params.input_weights[b].value.extent(2) != kernels[b]) {
      throw DimensionError("mconv: branch kernel " +
                           std::to_string(params.input_weights[b].value.extent(2)) +
                           ", expected " + std::to_string(kernels[b]));
    }
    xs[b] = ops::conv2d(x, t.parameter(params.input_weights[b]));
    hs[b] = ops::conv2d(h, t.parameter(params.hidden_weights[b]));
  }
  return ops::tanh(ops::add_channel_bias(
      ops::add(ops::concat_channels(xs), ops::concat_channels(hs)), t.parameter(params.bias)));
}

CellVars cell_step(const CellConfig& config, CellParams& params, Var x, CellVars state) {
  check_state(config, x.value(), state.hidden.value(), state.cell.value());
  Tape& t = x.tape();
  StepInputs in{x, state.hidden, {}, {}, {}, {}};
  const CellVariant v = config.variant;
  if (v != CellVariant::kConvLstm && v != CellVariant::kSconvConvLstm) {
    in.x_pool = ops::global_avg_pool(x);
    in.h_pool = ops::global_avg_pool(state.hidden);
  }
  if (v == CellVariant::kFcConvLstm) in.ones_map = t.constant(Tensor({1, config.height, config.width}, 1));
  if (v == CellVariant::kSconvConvLstm) in.ones_vec = t.constant(Tensor({config.hidden_channels}, 1));

  std::array<Var, 3> gate;
  for (std::size_t i = 0; i < 3; ++i) {
    gate[i] = in_gate(kGateNames[i], [&] { return gate_value(v, params.gates[i], in); });
  }
  Var g = in_gate("modulation", [&] {
    if (params.multiscale_modulation) {
      return mconv(x, state.hidden, *params.multiscale_modulation, config.kernel);
    }
    ConvPath& m = *params.modulation;
    return ops::tanh(ops::add_channel_bias(conv_sum(x, state.hidden, m.input_weight, m.hidden_weight),
                                           t.parameter(m.bias)));
  });
  Var c = in_gate("cell", [&] {
    return ops::add(ops::hadamard(gate[kForgetGate], state.cell), ops::hadamard(gate[kInputGate], g));
  });
  Var h = in_gate("hidden", [&] { return ops::hadamard(gate[kOutputGate], ops::tanh(c)); });
  return CellVars{h, c};
}

CellState cell_step(const CellConfig& config, const CellParams& params, const Tensor& x,
                    const CellState& state) {
  Tape tape(false);
  // A tape without gradients only reads parameter values.
  CellParams& readable = const_cast<CellParams&>(params);
  CellVars out = cell_step(config, readable, tape.constant(x),
                           CellVars{tape.constant(state.hidden), tape.constant(state.cell)});
  return CellState{out.hidden.value(), out.cell.value()};
}

}  // namespace msd
