// Residual convolutional feature extractor without upsampling, and 3x3
// feature unfolding.
//
// Parameters live in a ParamStore under "<prefix>.":
//   head.w, head.b                  3 -> C
//   block<i>.conv1.{w,b}, block<i>.conv2.{w,b}   C -> C, i in [0, blocks)
//   tail.w, tail.b                  C -> C
// The network is
//   h = head(x); r = h; for each block: r = r + conv2(relu(conv1(r)));
//   out = tail(r) + h
// and keeps the input's spatial size.
#pragma once

#include <cstdint>
#include <string>

#include "ddir/imaging/image.h"
#include "ddir/numerics/ops.h"

namespace ddir::encoder {

using numerics::ParamStore;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

struct EncoderConfig {
  std::size_t channels = 32;
  std::size_t blocks = 4;
  std::size_t kernel = 3;

  // Throws UsageError for channels == 0 or an even kernel.
  void validate() const;
};

template <typename T>
void init_encoder(ParamStore<T>& store, const std::string& prefix, const EncoderConfig& cfg,
                  std::uint64_t seed);

// `image` is 3 x H x W; returns C x H x W. Throws UsageError when a
// parameter's shape disagrees with `cfg`.
template <typename T>
Var<T> encode(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
              const EncoderConfig& cfg, Var<T> image);

// C x h x w -> 9C x h x w. Channel c * 9 + k at (y, x) holds channel c at the
// k-th neighbour of (y, x), neighbours in row-major order starting top-left,
// with coordinates clamped to the map.
template <typename T>
Var<T> unfold3x3(Var<T> fm);

// Planar 3 x H x W copy of an image with `shift` added to every sample.
template <typename T>
Tensor<T> image_to_tensor(const imaging::Image& img, T shift = T(0));

}  // namespace ddir::encoder
