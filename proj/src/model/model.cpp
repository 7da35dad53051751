#include "msdlstm/model/model.hpp"

#include <string>

#include "msdlstm/core/errors.hpp"
#include "msdlstm/core/ops.hpp"
#include "msdlstm/core/random.hpp"

namespace msd {
namespace {

void xavier_conv(Parameter& p, Rng& rng) {
  const Shape& s = p.value.shape();
  const std::size_t area = s[2] * s[3];
  xavier_uniform(p.value, s[1] * area, s[0] * area, rng);
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

template <typename Params, typename Out>
void collect(Params& params, std::vector<Out*>& out) {
  for (auto& enc : params.encoders) {
    for (auto& layer : enc.layers) {
      out.push_back(&layer.weight);
      out.push_back(&layer.bias);
    }
  }
  for (auto* p : params.cell.parameters()) out.push_back(p);
  auto& c = params.classifier;
  out.insert(out.end(), {&c.refine_weight, &c.refine_bias, &c.output_weight, &c.output_bias});
}

}  // namespace

EncoderConfig EncoderConfig::standard(std::size_t feature_channels) {
  return EncoderConfig{{{feature_channels, 3, 2}, {feature_channels, 3, 2},
                        {feature_channels, 3, 1}}};
}

std::pair<std::size_t, std::size_t> EncoderConfig::output_size(std::size_t h,
                                                               std::size_t w) const {
  for (const auto& l : layers) {
    h = ceil_div(h, l.stride);
    w = ceil_div(w, l.stride);
  }
  return {h, w};
}

void EncoderConfig::validate(std::size_t h, std::size_t w) const {
  if (layers.empty()) throw ConfigError("encoder needs at least one layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "encoder layer " + std::to_string(i);
    if (l.out_channels == 0) throw ConfigError(where + ": output channels must be >= 1");
    if (l.kernel == 0 || l.kernel % 2 == 0)
      throw ConfigError(where + ": kernel must be odd, got " + std::to_string(l.kernel));
    if (l.stride == 0) throw ConfigError(where + ": stride must be >= 1");
    if (h < l.kernel || w < l.kernel) {
      throw ConfigError(where + ": input " + std::to_string(h) + "x" + std::to_string(w) +
                        " is smaller than its " + std::to_string(l.kernel) + "x" +
                        std::to_string(l.kernel) + " kernel");
    }
    h = ceil_div(h, l.stride);
    w = ceil_div(w, l.stride);
  }
}

ModelConfig ModelConfig::make(CellVariant variant, std::size_t input_h, std::size_t input_w,
                              std::size_t label_h, std::size_t label_w, std::size_t steps,
                              std::size_t hidden_channels, std::size_t num_classes,
                              std::size_t feature_channels, std::size_t kernel) {
  ModelConfig c;
  c.encoder = EncoderConfig::standard(feature_channels);
  const auto [h, w] = c.encoder.output_size(input_h, input_w);
  c.cell = CellConfig{variant, kernel, kNumElements * feature_channels, hidden_channels, h, w};
  c.steps = steps;
  c.num_classes = num_classes;
  c.input_h = input_h;
  c.input_w = input_w;
  c.label_h = label_h;
  c.label_w = label_w;
  c.validate();
  return c;
}

void ModelConfig::validate() const {
  if (steps == 0) throw ConfigError("sequence length must be >= 1");
  if (num_classes < 2) throw ConfigError("need at least 2 classes, got " + std::to_string(num_classes));
  if (num_classes > 256) throw ConfigError("at most 256 classes are supported");
  encoder.validate(input_h, input_w);
  cell.validate();
  if (cell.input_channels != kNumElements * encoder.feature_channels()) {
    throw ConfigError("cell input channels " + std::to_string(cell.input_channels) +
                      " must equal 4 x encoder feature channels (" +
                      std::to_string(kNumElements * encoder.feature_channels()) + ")");
  }
  const auto [h, w] = encoder.output_size(input_h, input_w);
  if (cell.height != h || cell.width != w) {
    throw ConfigError("cell grid " + std::to_string(cell.height) + "x" +
                      std::to_string(cell.width) + " does not match encoder output " +
                      std::to_string(h) + "x" + std::to_string(w));
  }
  if (label_h < h || label_w < w) {
    throw ConfigError("label grid " + std::to_string(label_h) + "x" + std::to_string(label_w) +
                      " must not be smaller than the feature grid " + std::to_string(h) + "x" +
                      std::to_string(w));
  }
}

std::vector<Parameter*> ModelParams::parameters() {
  std::vector<Parameter*> out;
  collect(*this, out);
  return out;
}

std::vector<const Parameter*> ModelParams::parameters() const {
  std::vector<const Parameter*> out;
  collect(*this, out);
  return out;
}

EncoderParams make_encoder_params(const EncoderConfig& config, std::string_view element) {
  EncoderParams p;
  std::size_t in = 1;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const auto& l = config.layers[i];
    const std::string prefix = "encoder." + std::string(element) + "." + std::to_string(i);
    p.layers.push_back({Parameter(prefix + ".w", Tensor({l.out_channels, in, l.kernel, l.kernel})),
                        Parameter(prefix + ".b", Tensor({l.out_channels}), ParamKind::kBias)});
    in = l.out_channels;
  }
  return p;
}

void initialize_encoder_params(EncoderParams& params, Rng& rng) {
  for (auto& l : params.layers) {
    xavier_conv(l.weight, rng);
    l.bias.value.fill(0);
  }
}

ModelParams make_model_params(const ModelConfig& config) {
  config.validate();
  const std::size_t ch = config.cell.hidden_channels;
  const std::size_t k = config.num_classes;
  ModelParams p{
      {},
      make_cell_params(config.cell),
      {Parameter("classifier.refine.w", Tensor({ch, ch, 3, 3})),
       Parameter("classifier.refine.b", Tensor({ch}), ParamKind::kBias),
       Parameter("classifier.output.w", Tensor({k, ch, 3, 3})),
       Parameter("classifier.output.b", Tensor({k}), ParamKind::kBias)}};
  for (std::size_t e = 0; e < kNumElements; ++e)
    p.encoders[e] = make_encoder_params(config.encoder, kElementNames[e]);
  return p;
}

ModelParams init_model_params(const ModelConfig& config, std::uint64_t seed) {
  ModelParams p = make_model_params(config);
  Rng cell_rng = derive_rng(seed, 0);
  initialize_cell_params(p.cell, config.cell, cell_rng);
  for (std::size_t e = 0; e < kNumElements; ++e) {
    Rng rng = derive_rng(seed, 1 + e);
    initialize_encoder_params(p.encoders[e], rng);
  }
  Rng rng = derive_rng(seed, 1 + kNumElements);
  xavier_conv(p.classifier.refine_weight, rng);
  // Output weights stay zero: every class starts tied and argmax picks class 0.
  return p;
}

Var encode_element(const EncoderConfig& config, EncoderParams& params, Var grid) {
  if (params.layers.size() != config.layers.size())
    throw DimensionError("encoder parameters do not match its config");
  Tape& tape = grid.tape();
  Var x = grid;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    auto& l = params.layers[i];
    x = ops::conv2d(x, tape.parameter(l.weight), tape.parameter(l.bias), config.layers[i].stride);
    if (i + 1 < config.layers.size()) x = ops::tanh(x);
  }
  return x;
}

Var classify(ClassifierParams& params, Var hidden, std::size_t label_h, std::size_t label_w) {
  Tape& tape = hidden.tape();
  Var x = ops::tanh(ops::conv2d(hidden, tape.parameter(params.refine_weight),
                                tape.parameter(params.refine_bias)));
  x = ops::conv2d(x, tape.parameter(params.output_weight), tape.parameter(params.output_bias));
  return ops::bilinear_upsample(x, label_h, label_w);
}

void check_sample(const ModelConfig& config, const GridSequenceSample& sample) {
  if (sample.steps != config.steps)
    throw DimensionError("sample has " + std::to_string(sample.steps) + " steps, model expects " +
                         std::to_string(config.steps));
  if (sample.grids.size() != sample.steps * kNumElements)
    throw DimensionError("sample has " + std::to_string(sample.grids.size()) +
                         " grids, expected steps x 4 = " +
                         std::to_string(sample.steps * kNumElements));
  const Shape want{1, config.input_h, config.input_w};
  for (const Tensor& g : sample.grids) {
    if (g.shape() != want)
      throw DimensionError("element grid " + shape_string(g.shape()) + ", model expects " +
                           shape_string(want));
  }
  if (sample.label.height != config.label_h || sample.label.width != config.label_w)
    throw DimensionError("label grid " + std::to_string(sample.label.height) + "x" +
                         std::to_string(sample.label.width) + ", model expects " +
                         std::to_string(config.label_h) + "x" + std::to_string(config.label_w));
}

Var forward_sequence(Tape& tape, const ModelConfig& config, ModelParams& params,
                     const GridSequenceSample& sample) {
  check_sample(config, sample);
  const CellState zero = CellState::zeros(config.cell);
  CellVars state{tape.constant(zero.hidden), tape.constant(zero.cell)};
  for (std::size_t t = 0; t < config.steps; ++t) {
    std::array<Var, kNumElements> features;
    for (std::size_t e = 0; e < kNumElements; ++e)
      features[e] = encode_element(config.encoder, params.encoders[e],
                                   tape.constant(sample.grid(t, e)));
    state = cell_step(config.cell, params.cell, ops::concat_channels(features), state);
  }
  return classify(params.classifier, state.hidden, config.label_h, config.label_w);
}

Tensor predict_logits(const ModelConfig& config, const ModelParams& params,
                      const GridSequenceSample& sample) {
  Tape tape(false);
  // A tape without gradients only reads parameter values.
  return forward_sequence(tape, config, const_cast<ModelParams&>(params), sample).value();
}

Var sequence_loss(Var logits, const LabelGrid& labels) {
  return ops::softmax_cross_entropy(logits, labels);
}

}  // namespace msd
