#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msdlstm/core/tensor.hpp"

namespace msd {

enum class ParamKind { kWeight, kBias };

// A trainable tensor with its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value, ParamKind kind = ParamKind::kWeight)
      : name(std::move(name)), value(std::move(value)), grad(this->value.shape()),
        kind(kind) {}

  void zero_grad() { grad.fill(Real(0)); }
  std::size_t size() const { return value.size(); }

  std::string name;
  Tensor value;
  Tensor grad;
  ParamKind kind = ParamKind::kWeight;
};

class Tape;

// Handle to a value recorded on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t index) : tape_(tape), index_(index) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  Tape& tape() const { return *tape_; }
  std::size_t index() const { return index_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

// Linear record of executed primitive ops. Backward walks the record in exact
// reverse order and is allowed once per forward pass; `reset()` starts a new
// forward pass.
class Tape {
 public:
  // Receives the gradient and value of the node's output and accumulates into
  // the gradient slots of its inputs.
  using BackwardFn =
      std::function<void(Tape&, const Tensor& out_grad, const Tensor& out_value)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }

  Var constant(Tensor value);
  // The leaf refers to `param.value` directly; the parameter must outlive the
  // tape's current forward/backward pass and must not change during it.
  Var parameter(Parameter& param);

  // Records the output of a primitive op computed from `inputs`. Throws
  // NumericError naming `op` if `value` holds a non-finite entry. The backward
  // closure is dropped when no input leads back to a parameter.
  Var record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward);
  Var record(std::string_view op, Tensor value, std::span<const Var> inputs,
             BackwardFn backward);

  // Populates Parameter::grad (accumulating) for every parameter leaf reached
  // from the scalar `loss`.
  void backward(Var loss);

  void reset();

  std::size_t size() const { return nodes_.size(); }
  const Tensor& value(std::size_t index) const {
    const Node& n = nodes_[index];
    return n.param != nullptr ? n.param->value : n.value;
  }
  bool requires_grad(std::size_t index) const { return nodes_[index].requires_grad; }
  bool requires_grad(Var v) const { return nodes_[v.index()].requires_grad; }
  std::string_view op_name(std::size_t index) const { return nodes_[index].op; }

  // Adds `delta` into the gradient slot of node `index`.
  void accumulate(std::size_t index, const Tensor& delta);
  // Direct access to the gradient slot, allocated on first use.
  Tensor& grad_slot(std::size_t index);

  // Node indices in the order the last backward pass visited them.
  const std::vector<std::size_t>& last_backward_order() const { return visit_order_; }

 private:
  struct Node {
    std::string_view op;
    Tensor value;
    Tensor grad;  // gradient slot, allocated on first use
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
    Parameter* param = nullptr;
  };

  void check_open(std::string_view op) const;

  std::vector<Node> nodes_;
  std::vector<std::size_t> visit_order_;
  bool grad_enabled_;
  bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(index_); }

}  // namespace msd
