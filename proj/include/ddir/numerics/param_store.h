// Named trainable tensors with their gradients and Adam moments.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ddir/numerics/tensor.h"

namespace ddir::numerics {

template <typename T>
class ParamStore {
 public:
  struct Slot {
    Tensor<T> value;
    Tensor<T> grad;  // empty until a backward pass or zero_grad()
    Tensor<T> first_moment;
    Tensor<T> second_moment;
  };

  void add(const std::string& name, Tensor<T> value) {
    if (slots_.count(name)) throw UsageError("duplicate parameter '" + name + "'");
    Slot slot;
    slot.first_moment = Tensor<T>(value.shape());
    slot.second_moment = Tensor<T>(value.shape());
    slot.value = std::move(value);
    slots_.emplace(name, std::move(slot));
  }

  bool contains(const std::string& name) const { return slots_.count(name) != 0; }

  Slot& slot(const std::string& name) {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw UsageError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Slot& slot(const std::string& name) const {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw UsageError("unknown parameter '" + name + "'");
    return it->second;
  }

  Tensor<T>& value(const std::string& name) { return slot(name).value; }
  const Tensor<T>& value(const std::string& name) const { return slot(name).value; }

  // Gradient tensor; allocated as zeros on first access.
  Tensor<T>& grad(const std::string& name) {
    Slot& s = slot(name);
    if (s.grad.shape() != s.value.shape() || s.grad.empty() != s.value.empty()) {
      s.grad = Tensor<T>(s.value.shape());
    }
    return s.grad;
  }
  bool has_grad(const std::string& name) const {
    const Slot& s = slot(name);
    return s.grad.shape() == s.value.shape() && s.grad.size() == s.value.size() &&
           !(s.grad.empty() && !s.value.empty());
  }

  void zero_grad() {
    for (auto& [name, s] : slots_) s.grad = Tensor<T>(s.value.shape());
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(slots_.size());
    for (const auto& [name, s] : slots_) out.push_back(name);
    return out;
  }

  std::size_t size() const { return slots_.size(); }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& [name, s] : slots_) n += s.value.size();
    return n;
  }

  std::uint64_t step() const { return step_; }
  void advance_step() { ++step_; }

  // Copy of the parameter values in another precision. Gradients and
  // optimizer state are not carried over.
  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (const auto& [name, s] : slots_) out.add(name, s.value.template cast<U>());
    return out;
  }

 private:
  std::map<std::string, Slot> slots_;
  std::uint64_t step_ = 0;
};

}  // namespace ddir::numerics
