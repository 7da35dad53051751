#include "msdlstm/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "msdlstm/core/errors.hpp"

namespace msd {
namespace {

double evaluate(const ScalarFunction& f) {
  Tape tape(false);
  return static_cast<double>(f(tape).value()[0]);
}

std::vector<std::size_t> pick_entries(std::size_t n, std::size_t limit, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (n <= limit) return idx;
  // Partial Fisher-Yates with the raw engine output keeps the selection
  // identical across standard library implementations.
  for (std::size_t i = 0; i < limit; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

GradcheckReport gradcheck(const ScalarFunction& f, std::span<Parameter* const> params,
                          const GradcheckOptions& options) {
  if (!(options.eps > 0)) throw ConfigError("gradcheck: eps must be positive");
  GradcheckReport report;
  try {
    for (Parameter* p : params) p->zero_grad();
    {
      Tape tape;
      Var loss = f(tape);
      tape.backward(loss);
    }
    std::mt19937_64 rng(options.seed);
    for (Parameter* p : params) {
      GradcheckEntry entry{p->name, 0, 0};
      for (std::size_t i : pick_entries(p->size(), options.max_entries_per_tensor, rng)) {
        const Real saved = p->value[i];
        p->value[i] = saved + static_cast<Real>(options.eps);
        const double up = evaluate(f);
        p->value[i] = saved - static_cast<Real>(options.eps);
        const double down = evaluate(f);
        p->value[i] = saved;
        const double numeric = (up - down) / (2 * options.eps);
        const double analytic = static_cast<double>(p->grad[i]);
        const double denom = std::max({1.0, std::abs(analytic), std::abs(numeric)});
        entry.max_rel_error = std::max(entry.max_rel_error, std::abs(analytic - numeric) / denom);
        ++entry.checked;
      }
      report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
      report.entries.push_back(std::move(entry));
    }
  } catch (const NumericError& e) {
    report.failure = e.what();
    report.passed = false;
    return report;
  }
  report.passed = report.max_rel_error <= options.tol;
  return report;
}

}  // namespace msd
