#include "msdlstm/cells/serialize.hpp"

#include <sstream>

#include "msdlstm/cells/param_count.hpp"
#include "msdlstm/core/errors.hpp"

namespace msd {

void write_cell(BinaryWriter& out, const CellConfig& c, const CellParams& params) {
  out.u32(static_cast<std::uint32_t>(c.variant));
  out.u32(static_cast<std::uint32_t>(c.kernel));
  out.u32(static_cast<std::uint32_t>(c.input_channels));
  out.u32(static_cast<std::uint32_t>(c.hidden_channels));
  out.u32(static_cast<std::uint32_t>(c.height));
  out.u32(static_cast<std::uint32_t>(c.width));
  for (const Parameter* p : params.parameters()) out.reals(p->value.data());
}

LoadedCell read_cell(BinaryReader& in) {
  const std::uint64_t header_at = in.offset();
  CellConfig c;
  const std::uint32_t variant = in.u32("cell header");
  if (variant > 4) throw FormatError("unknown cell variant " + std::to_string(variant), header_at);
  c.variant = static_cast<CellVariant>(variant);
  c.kernel = in.u32("cell header");
  c.input_channels = in.u32("cell header");
  c.hidden_channels = in.u32("cell header");
  c.height = in.u32("cell header");
  c.width = in.u32("cell header");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid cell header: ") + e.what(), header_at);
  }
  constexpr std::size_t kMaxExtent = 1u << 20;
  if (c.kernel > 1023 || c.input_channels > kMaxExtent || c.hidden_channels > kMaxExtent ||
      c.height > kMaxExtent || c.width > kMaxExtent) {
    throw FormatError("implausible cell header dimensions", header_at);
  }
  // Sized from the header before anything is allocated.
  const std::uint64_t weights =
      param_count_formula(c.variant, c.kernel, c.input_channels, c.hidden_channels);
  const std::uint64_t biases = c.variant == CellVariant::kSconvConvLstm
                                   ? 3 + c.hidden_channels
                                   : 4 * static_cast<std::uint64_t>(c.hidden_channels);
  in.require_remaining((weights + biases) * 8, "cell weights");
  CellParams params = make_cell_params(c);
  for (Parameter* p : params.parameters()) in.reals(p->value.data(), "cell weights");
  return LoadedCell{c, std::move(params)};
}

std::string cell_to_bytes(const CellConfig& config, const CellParams& params) {
  std::ostringstream out(std::ios::binary);
  BinaryWriter w(out);
  write_cell(w, config, params);
  return out.str();
}

LoadedCell cell_from_bytes(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  BinaryReader r(in, bytes.size());
  return read_cell(r);
}

}  // namespace msd
