#include "msdlstm/cells/param_count.hpp"

namespace msd {

std::uint64_t param_count_formula(CellVariant variant, std::size_t kernel,
                                  std::size_t input_channels, std::size_t hidden_channels) {
  CellConfig{variant, kernel, input_channels, hidden_channels, 1, 1}.validate();
  const std::uint64_t k2 = static_cast<std::uint64_t>(kernel) * kernel;
  const std::uint64_t ch = hidden_channels;
  const std::uint64_t s = static_cast<std::uint64_t>(input_channels) + hidden_channels;
  switch (variant) {
    case CellVariant::kConvLstm: return k2 * s * ch * 4;
    case CellVariant::kFcConvLstm: return s * (3 * ch + k2 * ch);
    case CellVariant::kSconvConvLstm: return s * (3 * k2 + k2 * ch);
    case CellVariant::kDeconstructedConvLstm: return s * (3 * ch + 3 * k2 + k2 * ch);
    case CellVariant::kMsdConvLstm: return s * (k2 * (ch + 3) + 5 * ch);
  }
  return 0;
}

ParamCount param_count_enumerated(const CellParams& params) {
  ParamCount count;
  for (const Parameter* p : params.parameters()) {
    (p->kind == ParamKind::kWeight ? count.weights : count.biases) += p->size();
  }
  return count;
}

}  // namespace msd
