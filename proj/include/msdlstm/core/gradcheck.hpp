#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "msdlstm/core/autograd.hpp"

namespace msd {

struct GradcheckOptions {
  double eps = 1e-4;
  double tol = 1e-4;
  // Tensors larger than this are checked on a random subsample of this many
  // entries.
  std::size_t max_entries_per_tensor = 128;
  std::uint64_t seed = 0;
};

struct GradcheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_rel_error = 0;
  bool passed = false;
  // Set when a forward pass failed, e.g. "non-finite value produced by conv2d".
  std::string failure;
};

// Builds the scalar loss on the given tape from the current parameter values.
using ScalarFunction = std::function<Var(Tape&)>;

// Compares backward() against central differences. The relative error of an
// entry is |analytic - numeric| / max(1, |analytic|, |numeric|); the check
// passes iff the maximum over all checked entries is <= tol.
GradcheckReport gradcheck(const ScalarFunction& f, std::span<Parameter* const> params,
                          const GradcheckOptions& options = {});

}  // namespace msd
