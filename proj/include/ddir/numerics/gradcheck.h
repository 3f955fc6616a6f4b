// Central finite-difference verification of reverse-mode gradients.
#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "ddir/numerics/tape.h"

namespace ddir::numerics {

// Builds a scalar on a fresh tape from the given parameters. Must be
// deterministic.
using ScalarFn = std::function<Var<double>(Tape<double>&, ParamStore<double>&)>;

struct GradCheckReport {
  double max_rel_error = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0;  // at the worst element
  double numeric = 0;
  std::size_t elements_checked = 0;
  std::size_t elements_refined = 0;  // elements whose stencil crossed a kink
};

// Compares backward() against finite differences for every element of every
// parameter. Relative error uses max(|analytic|, |numeric|, 1e-8) as
// denominator. The central difference (f(p+h) - f(p-h)) / 2h is reported
// when it matches the one at h / 2 up to rounding. Otherwise a
// non-differentiable point (a ReLU or |x| kink) lies within h. The step is
// then halved, up to 24 times, until one side is clean, meaning its slopes
// (f(p +- s) - f(p)) / +-s at s and s / 2 match, and that slope is reported.
//
// This is exact for functions that are linear between kinks, where a larger
// h costs no truncation error and divides the rounding noise of f by more.
// Throws NumericError if f is not finite.
GradCheckReport finite_diff_check(const ScalarFn& fn, ParamStore<double>& params,
                                  double h = 1e-4);

}  // namespace ddir::numerics
