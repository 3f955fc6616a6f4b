// Reverse-mode differentiation over a linear record of tensor operations.
//
// Every operation appends one node holding its output value and a closure
// that pushes the node's gradient into its inputs. Backward replays the
// closures from the loss node down to the first node, so each recorded
// operation is visited once, in reverse execution order.
#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ddir/numerics/param_store.h"
#include "ddir/numerics/tensor.h"

namespace ddir::numerics {

template <typename T>
class Tape;

template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, std::size_t id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr; }
  Tape<T>* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  const Tensor<T>& value() const { return tape_->value(id_); }
  const Shape& shape() const { return value().shape(); }

 private:
  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
};

enum class GradMode {
  kOverwrite,   // zero every parameter gradient of the touched stores first
  kAccumulate,  // add into existing parameter gradients
};

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // With gradients disabled, parameters enter as constants and no closures
  // are kept. Used for inference.
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }

  Var<T> constant(Tensor<T> value) {
    return push(std::move(value), BackwardFn{}, false, "constant");
  }

  // Leaf bound to a named parameter. Repeated calls with the same store and
  // name return the same node.
  Var<T> parameter(ParamStore<T>& store, const std::string& name) {
    auto key = std::make_pair(&store, name);
    auto it = param_nodes_.find(key);
    if (it != param_nodes_.end()) return Var<T>(this, it->second);
    Var<T> v = push(store.value(name), BackwardFn{}, grad_enabled_, "parameter");
    if (grad_enabled_) {
      nodes_[v.id()].store = &store;
      nodes_[v.id()].param = name;
    }
    param_nodes_.emplace(std::move(key), v.id());
    return v;
  }

  // Appends an operation output. `fn` is dropped when no input needs a
  // gradient. Throws NumericError when the value holds NaN or Inf.
  Var<T> record(Tensor<T> value, std::initializer_list<Var<T>> inputs,
                BackwardFn fn, const char* op) {
    bool needs = false;
    for (const Var<T>& in : inputs) {
      check_owned(in, op);
      needs = needs || nodes_[in.id()].requires_grad;
    }
    needs = needs && grad_enabled_;
    return push(std::move(value), needs ? std::move(fn) : BackwardFn{}, needs, op);
  }

  Var<T> record(Tensor<T> value, const std::vector<Var<T>>& inputs,
                BackwardFn fn, const char* op) {
    bool needs = false;
    for (const Var<T>& in : inputs) {
      check_owned(in, op);
      needs = needs || nodes_[in.id()].requires_grad;
    }
    needs = needs && grad_enabled_;
    return push(std::move(value), needs ? std::move(fn) : BackwardFn{}, needs, op);
  }

  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  // Gradient buffer of a node, zero-initialized on first access.
  Tensor<T>& grad(std::size_t id) {
    Node& n = nodes_.at(id);
    if (!n.grad_ready) {
      n.grad = Tensor<T>(n.value.shape());
      n.grad_ready = true;
    }
    return n.grad;
  }
  bool has_grad(std::size_t id) const { return nodes_.at(id).grad_ready; }

  std::size_t size() const { return nodes_.size(); }
  const char* op_name(std::size_t id) const { return nodes_.at(id).op; }

  // Computes d(loss)/d(parameter) for every parameter leaf on this tape and
  // writes the result into the owning ParamStore.
  void backward(Var<T> loss, GradMode mode = GradMode::kOverwrite) {
    if (loss.tape() != this) throw UsageError("backward: loss was recorded on a different tape");
    if (loss.value().size() != 1) {
      throw UsageError("backward: loss must be a scalar, got shape " +
                       shape_string(loss.value().shape()));
    }
    std::set<ParamStore<T>*> stores;
    for (Node& n : nodes_) {
      n.grad = Tensor<T>();
      n.grad_ready = false;
      if (n.store) stores.insert(n.store);
    }
    if (mode == GradMode::kOverwrite) {
      for (ParamStore<T>* s : stores) s->zero_grad();
    }
    if (!nodes_[loss.id()].requires_grad) return;
    grad(loss.id())[0] = T(1);
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (!n.requires_grad || !n.grad_ready) continue;
      if (n.backward) n.backward(*this, id);
      if (n.store) {
        Tensor<T>& g = n.store->grad(n.param);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
      }
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool grad_ready = false;
    BackwardFn backward;
    bool requires_grad = false;
    ParamStore<T>* store = nullptr;
    std::string param;
    const char* op = "";
  };

  void check_owned(const Var<T>& v, const char* op) const {
    if (v.tape() != this || v.id() >= nodes_.size()) {
      throw UsageError(std::string(op) + ": input belongs to a different tape");
    }
  }

  Var<T> push(Tensor<T> value, BackwardFn fn, bool requires_grad, const char* op) {
    if (!value.all_finite()) {
      throw NumericError(std::string("non-finite value produced by ") + op);
    }
    Node n;
    n.value = std::move(value);
    n.backward = std::move(fn);
    n.requires_grad = requires_grad;
    n.op = op;
    nodes_.push_back(std::move(n));
    return Var<T>(this, nodes_.size() - 1);
  }

  std::deque<Node> nodes_;  // stable references across push_back
  std::map<std::pair<ParamStore<T>*, std::string>, std::size_t> param_nodes_;
  bool grad_enabled_ = true;
};

}  // namespace ddir::numerics
