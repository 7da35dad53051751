#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "msdlstm/core/autograd.hpp"
#include "msdlstm/core/tensor.hpp"

namespace msd {

enum class OptimizerKind { kAdamax, kAdam };

std::optional<OptimizerKind> parse_optimizer(std::string_view name);
std::string_view optimizer_name(OptimizerKind kind);

struct OptimizerOptions {
  double lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  void validate() const;
};

// Applies one update from each parameter's accumulated grad. Grads are left
// untouched. Throws NumericError naming the parameter on a non-finite grad,
// before any parameter is modified.
class Optimizer {
 public:
  Optimizer(std::vector<Parameter*> params, OptimizerOptions options);
  virtual ~Optimizer() = default;

  void step();
  std::uint64_t steps() const { return t_; }
  const OptimizerOptions& options() const { return options_; }
  const Tensor& first_moment(std::size_t i) const { return m_[i]; }
  const Tensor& second_moment(std::size_t i) const { return v_[i]; }

 protected:
  virtual void update(Parameter& p, Tensor& m, Tensor& v) = 0;

  std::vector<Parameter*> params_;
  OptimizerOptions options_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  std::uint64_t t_ = 0;
};

// m <- b1 m + (1 - b1) g;  u <- max(b2 u, |g|);
// theta <- theta - lr / (1 - b1^t) * m / (u + eps)
class Adamax : public Optimizer {
 public:
  using Optimizer::Optimizer;

 protected:
  void update(Parameter& p, Tensor& m, Tensor& u) override;
};

class Adam : public Optimizer {
 public:
  using Optimizer::Optimizer;

 protected:
  void update(Parameter& p, Tensor& m, Tensor& v) override;
};

std::unique_ptr<Optimizer> make_optimizer(OptimizerKind kind, std::vector<Parameter*> params,
                                          OptimizerOptions options);

}  // namespace msd
