#include "ddir/imaging/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ddir::imaging {

double luma_bt601(double r, double g, double b) {
  return (16.0 + 65.481 * r + 128.553 * g + 24.966 * b) / 255.0;
}

std::vector<double> rgb_to_y(const Image& img) {
  std::vector<double> y(img.pixel_count());
  const auto s = img.samples();
  for (std::size_t p = 0; p < y.size(); ++p) {
    y[p] = luma_bt601(s[p * 3], s[p * 3 + 1], s[p * 3 + 2]);
  }
  return y;
}

double psnr_y(const Image& a, const Image& b, std::size_t shave) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw UsageError("psnr_y: image sizes differ (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
  }
  if (2 * shave >= std::min(a.height(), a.width())) {
    throw UsageError("psnr_y: shave of " + std::to_string(shave) + " leaves no pixels");
  }
  const std::vector<double> ya = rgb_to_y(a);
  const std::vector<double> yb = rgb_to_y(b);
  const std::size_t w = a.width();
  double se = 0;
  std::size_t n = 0;
  for (std::size_t y = shave; y + shave < a.height(); ++y) {
    for (std::size_t x = shave; x + shave < w; ++x) {
      const double d = ya[y * w + x] - yb[y * w + x];
      se += d * d;
      ++n;
    }
  }
  const double mse = se / static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace ddir::imaging
