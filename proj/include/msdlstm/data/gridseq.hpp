#pragma once

#include <filesystem>
#include <string>

#include "msdlstm/core/binary_io.hpp"
#include "msdlstm/data/synthetic.hpp"

namespace msd {

// Layout, all little-endian:
//   "GSQ1"
//   u32 n_samples, steps, n_elements (= 4), H, W, H_lab, W_lab, num_classes
//   per sample: steps x 4 grids of H*W float64 (step-major, element order
//   R, A, U, V, row-major), then H_lab*W_lab u8 class ids
inline constexpr std::size_t kGridseqHeaderBytes = 4 + 8 * 4;

void write_gridseq(BinaryWriter& out, const Dataset& dataset);
// Validates the whole header and the total length before allocating sample
// storage. Throws FormatError with the byte offset of the problem.
Dataset read_gridseq(BinaryReader& in);

std::string gridseq_to_bytes(const Dataset& dataset);
Dataset gridseq_from_bytes(const std::string& bytes);

// Throws IoError when the file cannot be opened or written.
void write_gridseq(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_gridseq(const std::filesystem::path& path);

}  // namespace msd
