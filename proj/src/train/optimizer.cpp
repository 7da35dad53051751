#include "msdlstm/train/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "msdlstm/core/errors.hpp"

namespace msd {

std::optional<OptimizerKind> parse_optimizer(std::string_view name) {
  if (name == "adamax") return OptimizerKind::kAdamax;
  if (name == "adam") return OptimizerKind::kAdam;
  return std::nullopt;
}

std::string_view optimizer_name(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "adamax";
}

void OptimizerOptions::validate() const {
  if (!(lr >= 0) || !std::isfinite(lr))
    throw ConfigError("learning rate must be finite and >= 0, got " + std::to_string(lr));
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1))
    throw ConfigError("optimizer betas must lie in [0, 1)");
  if (!(eps > 0)) throw ConfigError("optimizer epsilon must be positive");
}

Optimizer::Optimizer(std::vector<Parameter*> params, OptimizerOptions options)
    : params_(std::move(params)), options_(options) {
  options_.validate();
  for (Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Optimizer::step() {
  for (Parameter* p : params_)
    if (!p->grad.all_finite()) throw NumericError("optimizer step", "gradient of " + p->name);
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) update(*params_[i], m_[i], v_[i]);
}

void Adamax::update(Parameter& p, Tensor& m, Tensor& u) {
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double step = options_.lr / (1.0 - std::pow(b1, static_cast<double>(t_)));
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double g = p.grad[k];
    m[k] = static_cast<Real>(b1 * m[k] + (1.0 - b1) * g);
    u[k] = static_cast<Real>(std::max(b2 * u[k], std::abs(g)));
    p.value[k] -= static_cast<Real>(step * m[k] / (u[k] + options_.eps));
  }
}

void Adam::update(Parameter& p, Tensor& m, Tensor& v) {
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double g = p.grad[k];
    m[k] = static_cast<Real>(b1 * m[k] + (1.0 - b1) * g);
    v[k] = static_cast<Real>(b2 * v[k] + (1.0 - b2) * g * g);
    p.value[k] -= static_cast<Real>(options_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + options_.eps));
  }
}

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::vector<Parameter*> params,
                                          OptimizerOptions options) {
  if (kind == OptimizerKind::kAdam) return std::make_unique<Adam>(std::move(params), options);
  return std::make_unique<Adamax>(std::move(params), options);
}

}  // namespace msd
