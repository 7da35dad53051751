#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "msdlstm/cells/cell.hpp"
#include "msdlstm/core/autograd.hpp"
#include "msdlstm/core/label_grid.hpp"
#include "msdlstm/core/tensor.hpp"
#include "msdlstm/data/sample.hpp"

namespace msd {

struct ConvLayerSpec {
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  bool operator==(const ConvLayerSpec&) const = default;
};

// A stack of same-padded convolutions on a single-channel grid. Every layer
// but the last is followed by tanh.
struct EncoderConfig {
  std::vector<ConvLayerSpec> layers;

  static EncoderConfig standard(std::size_t feature_channels = 8);

  std::size_t feature_channels() const { return layers.empty() ? 0 : layers.back().out_channels; }
  // Spatial extent after the stack: ceil division by each stride.
  std::pair<std::size_t, std::size_t> output_size(std::size_t h, std::size_t w) const;
  // Throws ConfigError for empty stacks, even or zero kernels, zero strides
  // and inputs smaller than a layer's kernel.
  void validate(std::size_t h, std::size_t w) const;
  bool operator==(const EncoderConfig&) const = default;
};

struct ModelConfig {
  EncoderConfig encoder;
  CellConfig cell;
  std::size_t steps = 4;
  std::size_t num_classes = 5;
  std::size_t input_h = 0;
  std::size_t input_w = 0;
  std::size_t label_h = 0;
  std::size_t label_w = 0;

  // Builds a consistent config: the cell's input channels and spatial size
  // follow from the encoder.
  static ModelConfig make(CellVariant variant, std::size_t input_h, std::size_t input_w,
                          std::size_t label_h, std::size_t label_w, std::size_t steps = 4,
                          std::size_t hidden_channels = 16, std::size_t num_classes = 5,
                          std::size_t feature_channels = 8, std::size_t kernel = 3);

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ConvLayerParams {
  Parameter weight;
  Parameter bias;
};

struct EncoderParams {
  std::vector<ConvLayerParams> layers;
};

struct ClassifierParams {
  Parameter refine_weight;  // [Ch, Ch, 3, 3]
  Parameter refine_bias;    // [Ch]
  Parameter output_weight;  // [classes, Ch, 3, 3]
  Parameter output_bias;    // [classes]
};

struct ModelParams {
  std::array<EncoderParams, kNumElements> encoders;
  CellParams cell;
  ClassifierParams classifier;

  // Encoders R, A, U, V (weight then bias per layer), the cell in its stream
  // order, then the classifier.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
};

ModelParams make_model_params(const ModelConfig& config);
ModelParams init_model_params(const ModelConfig& config, std::uint64_t seed);

EncoderParams make_encoder_params(const EncoderConfig& config, std::string_view element);
void initialize_encoder_params(EncoderParams& params, Rng& rng);

Var encode_element(const EncoderConfig& config, EncoderParams& params, Var grid);
Var classify(ClassifierParams& params, Var hidden, std::size_t label_h, std::size_t label_w);

// Runs the encoders and the recurrent cell over every step from zero state
// and classifies the final hidden state. Returns logits [classes, label_h,
// label_w]. Throws DimensionError when the sample does not match the config.
Var forward_sequence(Tape& tape, const ModelConfig& config, ModelParams& params,
                     const GridSequenceSample& sample);
Tensor predict_logits(const ModelConfig& config, const ModelParams& params,
                      const GridSequenceSample& sample);

Var sequence_loss(Var logits, const LabelGrid& labels);

void check_sample(const ModelConfig& config, const GridSequenceSample& sample);

}  // namespace msd
