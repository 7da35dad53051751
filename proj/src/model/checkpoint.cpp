#include "msdlstm/model/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "msdlstm/cells/serialize.hpp"
#include "msdlstm/core/errors.hpp"

namespace msd {
namespace {

constexpr char kMagic[4] = {'M', 'S', 'D', 'C'};
constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxExtent = 1u << 20;

std::uint32_t checked_u32(BinaryReader& in, const char* what) {
  const std::uint64_t at = in.offset();
  const std::uint32_t v = in.u32(what);
  if (v > kMaxExtent) throw FormatError(std::string("implausible ") + what, at);
  return v;
}

void read_param(BinaryReader& in, Parameter& p) { in.reals(p.value.data(), "model weights"); }

}  // namespace

void write_checkpoint(BinaryWriter& out, const ModelConfig& c, const ModelParams& params) {
  out.bytes(kMagic);
  out.u32(kCheckpointVersion);
  for (std::size_t v : {c.steps, c.num_classes, c.input_h, c.input_w, c.label_h, c.label_w})
    out.u32(static_cast<std::uint32_t>(v));
  out.u32(static_cast<std::uint32_t>(c.encoder.layers.size()));
  for (const auto& l : c.encoder.layers) {
    out.u32(static_cast<std::uint32_t>(l.out_channels));
    out.u32(static_cast<std::uint32_t>(l.kernel));
    out.u32(static_cast<std::uint32_t>(l.stride));
  }
  for (const auto& enc : params.encoders) {
    for (const auto& l : enc.layers) {
      out.reals(l.weight.value.data());
      out.reals(l.bias.value.data());
    }
  }
  write_cell(out, c.cell, params.cell);
  const auto& k = params.classifier;
  for (const Parameter* p : {&k.refine_weight, &k.refine_bias, &k.output_weight, &k.output_bias})
    out.reals(p->value.data());
}

Checkpoint read_checkpoint(BinaryReader& in) {
  char magic[4];
  in.bytes(magic, "checkpoint magic");
  if (std::string_view(magic, 4) != std::string_view(kMagic, 4))
    throw FormatError("not a checkpoint: bad magic", 0);
  const std::uint64_t version_at = in.offset();
  const std::uint32_t version = in.u32("checkpoint version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(kCheckpointVersion) + ")",
                      version_at);
  }
  const std::uint64_t header_at = in.offset();
  ModelConfig c;
  c.steps = checked_u32(in, "sequence length");
  c.num_classes = checked_u32(in, "class count");
  c.input_h = checked_u32(in, "input height");
  c.input_w = checked_u32(in, "input width");
  c.label_h = checked_u32(in, "label height");
  c.label_w = checked_u32(in, "label width");
  const std::uint64_t layers_at = in.offset();
  const std::uint32_t n_layers = in.u32("encoder layer count");
  if (n_layers == 0 || n_layers > kMaxLayers)
    throw FormatError("implausible encoder layer count " + std::to_string(n_layers), layers_at);
  in.require_remaining(12ull * n_layers, "encoder layer specs");
  std::uint64_t encoder_values = 0;
  std::size_t in_channels = 1;
  for (std::uint32_t i = 0; i < n_layers; ++i) {
    ConvLayerSpec l;
    l.out_channels = checked_u32(in, "encoder channels");
    l.kernel = checked_u32(in, "encoder kernel");
    l.stride = checked_u32(in, "encoder stride");
    if (l.kernel > 1023) throw FormatError("implausible encoder kernel", in.offset() - 8);
    encoder_values += l.out_channels * (in_channels * l.kernel * l.kernel + 1);
    in_channels = l.out_channels;
    c.encoder.layers.push_back(l);
  }
  in.require_remaining(encoder_values * kNumElements * 8, "encoder weights");
  std::array<EncoderParams, kNumElements> encoders;
  for (std::size_t e = 0; e < kNumElements; ++e) {
    encoders[e] = make_encoder_params(c.encoder, kElementNames[e]);
    for (auto& l : encoders[e].layers) {
      read_param(in, l.weight);
      read_param(in, l.bias);
    }
  }
  LoadedCell cell = read_cell(in);
  c.cell = cell.config;
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint header describes an invalid model: ") + e.what(),
                      header_at);
  }
  ModelParams params = make_model_params(c);
  params.encoders = std::move(encoders);
  params.cell = std::move(cell.params);
  auto& k = params.classifier;
  std::uint64_t classifier_values = 0;
  for (const Parameter* p : {&k.refine_weight, &k.refine_bias, &k.output_weight, &k.output_bias})
    classifier_values += p->size();
  in.require_remaining(classifier_values * 8, "classifier weights");
  for (Parameter* p : {&k.refine_weight, &k.refine_bias, &k.output_weight, &k.output_bias})
    read_param(in, *p);
  if (in.remaining() != UINT64_MAX && in.remaining() != 0) {
    throw FormatError(std::to_string(in.remaining()) + " trailing bytes after checkpoint",
                      in.offset());
  }
  return Checkpoint{std::move(c), std::move(params)};
}

std::string checkpoint_to_bytes(const ModelConfig& config, const ModelParams& params) {
  std::ostringstream out(std::ios::binary);
  BinaryWriter w(out);
  write_checkpoint(w, config, params);
  return out.str();
}

Checkpoint checkpoint_from_bytes(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  BinaryReader r(in, bytes.size());
  return read_checkpoint(r);
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing", path.string());
  BinaryWriter w(out);
  write_checkpoint(w, config, params);
  out.flush();
  if (!out) throw IoError("failed writing checkpoint", path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint", path.string());
  BinaryReader r(in, stream_remaining(in));
  return read_checkpoint(r);
}

}  // namespace msd
