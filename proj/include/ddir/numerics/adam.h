#pragma once

#include "ddir/numerics/param_store.h"

namespace ddir::numerics {

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update of every parameter in `store`. Advances the
// store's step counter by one. Throws UsageError if a parameter has no
// gradient (neither a backward pass nor zero_grad() populated it).
template <typename T>
void adam_step(ParamStore<T>& store, const AdamConfig& cfg);

}  // namespace ddir::numerics
