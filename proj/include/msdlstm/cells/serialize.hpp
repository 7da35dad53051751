#pragma once

#include <string>

#include "msdlstm/cells/cell.hpp"
#include "msdlstm/core/binary_io.hpp"

namespace msd {

// Cell weight stream: CellConfig as six little-endian u32 (variant, kernel,
// input channels, hidden channels, height, width), then every parameter of
// CellParams::parameters() as little-endian float64 in that order.
void write_cell(BinaryWriter& out, const CellConfig& config, const CellParams& params);

struct LoadedCell {
  CellConfig config;
  CellParams params;
};

// Throws FormatError on truncation or an invalid header.
LoadedCell read_cell(BinaryReader& in);

std::string cell_to_bytes(const CellConfig& config, const CellParams& params);
LoadedCell cell_from_bytes(const std::string& bytes);

}  // namespace msd
