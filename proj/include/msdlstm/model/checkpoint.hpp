#pragma once

#include <filesystem>
#include <string>

#include "msdlstm/core/binary_io.hpp"
#include "msdlstm/model/model.hpp"

namespace msd {

// Layout, all little-endian:
//   "MSDC", u32 version
//   u32 steps, num_classes, input_h, input_w, label_h, label_w
//   u32 encoder layer count, then (out_channels, kernel, stride) per layer
//   four encoder weight streams in element order R, A, U, V: per layer the
//   weight then the bias as float64
//   the cell stream (see write_cell)
//   classifier refine weight, refine bias, output weight, output bias as float64
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

void write_checkpoint(BinaryWriter& out, const ModelConfig& config, const ModelParams& params);
// Throws FormatError on bad magic, unsupported version, truncation or a
// header that does not describe a valid model.
Checkpoint read_checkpoint(BinaryReader& in);

std::string checkpoint_to_bytes(const ModelConfig& config, const ModelParams& params);
Checkpoint checkpoint_from_bytes(const std::string& bytes);

// Throws IoError when the file cannot be opened or written.
void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace msd
