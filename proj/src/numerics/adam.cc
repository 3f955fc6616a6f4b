#include "ddir/numerics/adam.h"

#include <cmath>

namespace ddir::numerics {

template <typename T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg) {
  const std::vector<std::string> names = store.names();
  for (const std::string& name : names) {
    if (!store.has_grad(name)) {
      throw UsageError("adam_step: parameter '" + name + "' has no gradient");
    }
  }
  store.advance_step();
  const double t = static_cast<double>(store.step());
  const T b1 = static_cast<T>(cfg.beta1);
  const T b2 = static_cast<T>(cfg.beta2);
  const T corr1 = static_cast<T>(1.0 - std::pow(cfg.beta1, t));
  const T corr2 = static_cast<T>(1.0 - std::pow(cfg.beta2, t));
  const T lr = static_cast<T>(cfg.lr);
  const T eps = static_cast<T>(cfg.eps);
  for (const std::string& name : names) {
    auto& slot = store.slot(name);
    T* p = slot.value.ptr();
    const T* g = slot.grad.ptr();
    T* m = slot.first_moment.ptr();
    T* v = slot.second_moment.ptr();
    for (std::size_t i = 0; i < slot.value.size(); ++i) {
      m[i] = b1 * m[i] + (T(1) - b1) * g[i];
      v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
      const T m_hat = m[i] / corr1;
      const T v_hat = v[i] / corr2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
    if (!slot.value.all_finite()) {
      throw NumericError("adam_step: non-finite value in parameter '" + name + "'");
    }
  }
}

template void adam_step<float>(ParamStore<float>&, const AdamConfig&);
template void adam_step<double>(ParamStore<double>&, const AdamConfig&);

}  // namespace ddir::numerics
