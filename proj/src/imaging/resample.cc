#include "ddir/imaging/resample.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace ddir::imaging {
namespace {

constexpr double kA = -0.5;

struct Taps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> make_taps(std::size_t src, std::size_t dst) {
  std::vector<Taps> taps(dst);
  const double ratio = static_cast<double>(src) / static_cast<double>(dst);
  const long last = static_cast<long>(src) - 1;
  for (std::size_t i = 0; i < dst; ++i) {
    const double s = (static_cast<double>(i) + 0.5) * ratio - 0.5;
    const long base = static_cast<long>(std::floor(s)) - 1;
    for (int t = 0; t < 4; ++t) {
      const long j = base + t;
      taps[i].index[t] = static_cast<std::size_t>(std::clamp(j, 0L, last));
      taps[i].weight[t] = keys_cubic(s - static_cast<double>(j));
    }
  }
  return taps;
}

}  // namespace

double keys_cubic(double x) {
  const double ax = std::abs(x);
  if (ax <= 1.0) return ((kA + 2.0) * ax - (kA + 3.0)) * ax * ax + 1.0;
  if (ax < 2.0) return ((kA * ax - 5.0 * kA) * ax + 8.0 * kA) * ax - 4.0 * kA;
  return 0.0;
}

Image bicubic_resize(const Image& img, const ResampleSpec& spec) {
  if (spec.height == 0 || spec.width == 0) throw UsageError("resample target extents must be positive");
  const std::size_t sh = img.height(), sw = img.width();
  const std::size_t dh = spec.height, dw = spec.width;
  constexpr std::size_t C = Image::kChannels;
  const std::vector<Taps> col_taps = make_taps(sw, dw);
  const std::vector<Taps> row_taps = make_taps(sh, dh);

  // Horizontal pass: sh x dw.
  std::vector<double> mid(sh * dw * C);
  for (std::size_t y = 0; y < sh; ++y) {
    for (std::size_t x = 0; x < dw; ++x) {
      const Taps& tp = col_taps[x];
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0;
        for (int t = 0; t < 4; ++t) acc += tp.weight[t] * img.at(y, tp.index[t], c);
        mid[(y * dw + x) * C + c] = acc;
      }
    }
  }
  // Vertical pass.
  Image out(dh, dw);
  for (std::size_t y = 0; y < dh; ++y) {
    const Taps& tp = row_taps[y];
    for (std::size_t x = 0; x < dw; ++x) {
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0;
        for (int t = 0; t < 4; ++t) acc += tp.weight[t] * mid[(tp.index[t] * dw + x) * C + c];
        out.at(y, x, c) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
      }
    }
  }
  return out;
}

}  // namespace ddir::imaging
