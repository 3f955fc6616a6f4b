#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ddir/common/error.h"

namespace ddir::imaging {

// RGB raster with float samples nominally in [0, 1]. Samples are stored
// row-major with interleaved channels: index (y * width + x) * 3 + c.
class Image {
 public:
  static constexpr std::size_t kChannels = 3;

  Image() = default;
  Image(std::size_t height, std::size_t width, float fill = 0.0f)
      : height_(height), width_(width), samples_(height * width * kChannels, fill) {
    if (height == 0 || width == 0) throw UsageError("image extents must be positive");
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixel_count() const { return height_ * width_; }
  bool empty() const { return samples_.empty(); }

  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return samples_[(y * width_ + x) * kChannels + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return samples_[(y * width_ + x) * kChannels + c];
  }

  std::span<float> samples() { return samples_; }
  std::span<const float> samples() const { return samples_; }

  void clamp() {
    for (float& v : samples_) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  }

  // Sub-window copy; the window must lie inside the image.
  Image crop(std::size_t y0, std::size_t x0, std::size_t h, std::size_t w) const {
    if (y0 + h > height_ || x0 + w > width_) throw UsageError("crop window outside image");
    Image out(h, w);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t c = 0; c < kChannels; ++c) out.at(y, x, c) = at(y0 + y, x0 + x, c);
      }
    }
    return out;
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.height_ == b.height_ && a.width_ == b.width_ && a.samples_ == b.samples_;
  }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> samples_;
};

}  // namespace ddir::imaging
