#include "ddir/numerics/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace ddir::numerics {
namespace {

constexpr int kMaxHalvings = 24;

double evaluate(const ScalarFn& fn, ParamStore<double>& params) {
  Tape<double> tape;
  tape.set_grad_enabled(false);
  const double v = fn(tape, params).value().item();
  if (!std::isfinite(v)) throw NumericError("finite_diff_check: function value is not finite");
  return v;
}

}  // namespace

GradCheckReport finite_diff_check(const ScalarFn& fn, ParamStore<double>& params,
                                  double h) {
  ParamStore<double> analytic_store = params.cast<double>();
  {
    Tape<double> tape;
    Var<double> loss = fn(tape, analytic_store);
    if (!std::isfinite(loss.value().item())) {
      throw NumericError("finite_diff_check: function value is not finite");
    }
    tape.backward(loss);
  }

  const double base = evaluate(fn, params);
  GradCheckReport report;
  for (const std::string& name : params.names()) {
    const Tensor<double>& analytic = analytic_store.grad(name);
    Tensor<double>& value = params.value(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      // One-sided slopes toward +h / 2^k and -h / 2^k, evaluated on demand.
      std::vector<double> fwd, bwd;
      auto slope = [&](std::vector<double>& cache, double dir, int k) {
        while (static_cast<int>(cache.size()) <= k) {
          const double step = dir * std::ldexp(h, -static_cast<int>(cache.size()));
          value[i] = saved + step;
          const double moved = evaluate(fn, params);
          value[i] = saved;
          cache.push_back((moved - base) / step);
        }
        return cache[k];
      };
      double numeric = 0;
      for (int k = 0;; ++k) {
        // Over a stretch with no kink the function is linear, so estimates at
        // h / 2^k and h / 2^(k+1) agree up to rounding. A kink at distance d
        // shifts them apart by a multiple of d / step.
        const double noise = 16 * std::numeric_limits<double>::epsilon() * std::abs(base) / std::ldexp(h, -k);
        const auto agree = [&](double a, double b) { return std::abs(a - b) <= noise; };
        const double f0 = slope(fwd, 1, k), f1 = slope(fwd, 1, k + 1);
        const double b0 = slope(bwd, -1, k), b1 = slope(bwd, -1, k + 1);
        if (agree(f0 + b0, f1 + b1)) {
          numeric = (f0 + b0) / 2;
          break;
        }
        if (k == 0) ++report.elements_refined;
        // The side whose linear stretch reaches farther gives the estimate
        // with the least rounding noise.
        if (agree(f0, f1) || agree(b0, b1)) {
          numeric = agree(f0, f1) ? f0 : b0;
          break;
        }
        if (k == kMaxHalvings) {
          numeric = (f1 + b1) / 2;
          break;
        }
      }
      if (const char* dbg = std::getenv("GC_DEBUG"); dbg && name + "[" + std::to_string(i) + "]" == dbg) {
        std::fprintf(stderr, "analytic %.6e final %.6e base %.17g\n", analytic[i], numeric, base);
        for (int k = 0; k < 20; ++k) std::fprintf(stderr, "k=%d s=%.3e f=%.6e b=%.6e\n", k, std::ldexp(h,-k), slope(fwd,1,k), slope(bwd,-1,k));
      }
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      ++report.elements_checked;
      if (report.worst_param.empty() || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace ddir::numerics
