#include "msdlstm/core/autograd.hpp"

#include "msdlstm/core/errors.hpp"

namespace msd {

void Tape::check_open(std::string_view op) const {
  if (backward_done_) {
    throw TapeError("cannot record " + std::string(op) +
                    " after backward; reset the tape for a new forward pass");
  }
}

Var Tape::constant(Tensor value) {
  check_open("constant");
  nodes_.push_back(Node{"constant", std::move(value), {}, false, false, {}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(Parameter& param) {
  check_open("parameter");
  nodes_.push_back(Node{"parameter", Tensor(), {}, false, grad_enabled_, {}, &param});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string_view op, Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(std::string_view op, Tensor value, std::span<const Var> inputs,
                 BackwardFn backward) {
  check_open(op);
  if (!value.all_finite()) throw NumericError(std::string(op), "");
  bool needs = false;
  for (const Var& v : inputs) {
    if (&v.tape() != this) throw TapeError(std::string(op) + ": input from another tape");
    needs = needs || nodes_[v.index()].requires_grad;
  }
  needs = needs && grad_enabled_;
  nodes_.push_back(Node{op, std::move(value), {}, false, needs,
                        needs ? std::move(backward) : BackwardFn{}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad_slot(std::size_t index) {
  Node& node = nodes_[index];
  if (!node.has_grad) {
    node.grad = Tensor(value(index).shape());
    node.has_grad = true;
  }
  return node.grad;
}

void Tape::accumulate(std::size_t index, const Tensor& delta) {
  Tensor& g = grad_slot(index);
  Real* dst = g.raw();
  const Real* src = delta.raw();
  for (std::size_t i = 0, n = g.size(); i < n; ++i) dst[i] += src[i];
}

void Tape::backward(Var loss) {
  if (!grad_enabled_) throw TapeError("backward on a tape recorded without gradients");
  if (backward_done_) throw TapeError("backward called twice without a new forward pass");
  if (loss.value().size() != 1) {
    throw DimensionError("backward: loss must be a scalar, got shape " +
                         shape_string(loss.shape()));
  }
  backward_done_ = true;
  visit_order_.clear();
  grad_slot(loss.index())[0] = Real(1);
  for (std::size_t i = loss.index() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad) continue;
    visit_order_.push_back(i);
    if (node.param != nullptr) {
      Real* dst = node.param->grad.raw();
      const Real* src = node.grad.raw();
      for (std::size_t k = 0, n = node.grad.size(); k < n; ++k) dst[k] += src[k];
    } else if (node.backward) {
      node.backward(*this, node.grad, node.value);
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  visit_order_.clear();
  backward_done_ = false;
}

}  // namespace msd
