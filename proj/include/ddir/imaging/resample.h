#pragma once

#include <cstddef>

#include "ddir/imaging/image.h"

namespace ddir::imaging {

// Keys cubic convolution kernel with a = -0.5.
double keys_cubic(double x);

struct ResampleSpec {
  std::size_t height;
  std::size_t width;
};

// Separable cubic resampling with the Keys kernel (a = -0.5). Output pixel i
// samples source coordinate (i + 0.5) * (N_src / N_dst) - 0.5, taps outside
// the source are replaced by the nearest edge sample, and the result is
// clamped to [0, 1]. Rows are resampled first, then columns. The kernel is
// not widened when shrinking.
Image bicubic_resize(const Image& img, const ResampleSpec& spec);

}  // namespace ddir::imaging
