#include "ddir/encoder/encoder.h"

#include <algorithm>

#include "ddir/numerics/init.h"

namespace ddir::encoder {

using numerics::Shape;

namespace {

struct ConvSpec {
  std::string name;
  std::size_t in, out;
};

std::vector<ConvSpec> conv_layout(const EncoderConfig& cfg) {
  std::vector<ConvSpec> convs{{"head", 3, cfg.channels}};
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string block = "block" + std::to_string(b);
    convs.push_back({block + ".conv1", cfg.channels, cfg.channels});
    convs.push_back({block + ".conv2", cfg.channels, cfg.channels});
  }
  convs.push_back({"tail", cfg.channels, cfg.channels});
  return convs;
}

template <typename T>
void expect_shape(const ParamStore<T>& store, const std::string& name, const Shape& shape) {
  const Shape& got = store.value(name).shape();
  if (got != shape) {
    throw UsageError("encoder parameter '" + name + "' has shape " + numerics::shape_string(got) +
                     ", config expects " + numerics::shape_string(shape));
  }
}

}  // namespace

void EncoderConfig::validate() const {
  if (channels == 0) throw UsageError("encoder channels must be >= 1");
  if (kernel % 2 == 0) throw UsageError("encoder kernel size must be odd");
}

template <typename T>
void init_encoder(ParamStore<T>& store, const std::string& prefix, const EncoderConfig& cfg,
                  std::uint64_t seed) {
  cfg.validate();
  const std::size_t k = cfg.kernel;
  for (const ConvSpec& c : conv_layout(cfg)) {
    const std::size_t fan_in = c.in * k * k;
    numerics::add_uniform(store, prefix + "." + c.name + ".w", Shape{c.out, c.in, k, k}, fan_in, seed);
    numerics::add_uniform(store, prefix + "." + c.name + ".b", Shape{c.out}, fan_in, seed);
  }
}

template <typename T>
Var<T> encode(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
              const EncoderConfig& cfg, Var<T> image) {
  cfg.validate();
  const std::size_t k = cfg.kernel, pad = (k - 1) / 2;
  for (const ConvSpec& c : conv_layout(cfg)) {
    expect_shape(store, prefix + "." + c.name + ".w", Shape{c.out, c.in, k, k});
    expect_shape(store, prefix + "." + c.name + ".b", Shape{c.out});
  }
  auto conv = [&](const std::string& name, Var<T> x) {
    return numerics::conv2d(x, tape.parameter(store, prefix + "." + name + ".w"),
                            tape.parameter(store, prefix + "." + name + ".b"), pad);
  };
  const Var<T> head = conv("head", image);
  Var<T> r = head;
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string block = "block" + std::to_string(b);
    r = numerics::add(r, conv(block + ".conv2", numerics::relu(conv(block + ".conv1", r))));
  }
  return numerics::add(conv("tail", r), head);
}

template <typename T>
Var<T> unfold3x3(Var<T> fm) {
  if (fm.shape().size() != 3) {
    throw UsageError("unfold3x3: expected C x H x W, got " + numerics::shape_string(fm.shape()));
  }
  const std::size_t c = fm.shape()[0], h = fm.shape()[1], w = fm.shape()[2];
  // Source flat position of each (neighbour, position) pair.
  std::vector<std::size_t> source(9 * h * w);
  for (std::size_t k = 0; k < 9; ++k) {
    const long dy = static_cast<long>(k / 3) - 1, dx = static_cast<long>(k % 3) - 1;
    for (std::size_t y = 0; y < h; ++y) {
      const std::size_t sy = static_cast<std::size_t>(std::clamp(static_cast<long>(y) + dy, 0L, static_cast<long>(h) - 1));
      for (std::size_t x = 0; x < w; ++x) {
        const std::size_t sx = static_cast<std::size_t>(std::clamp(static_cast<long>(x) + dx, 0L, static_cast<long>(w) - 1));
        source[(k * h + y) * w + x] = sy * w + sx;
      }
    }
  }
  const std::size_t hw = h * w;
  Tensor<T> out(Shape{9 * c, h, w});
  const T* src = fm.value().ptr();
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t k = 0; k < 9; ++k) {
      T* dst = out.ptr() + (ch * 9 + k) * hw;
      const std::size_t* idx = source.data() + k * hw;
      for (std::size_t p = 0; p < hw; ++p) dst[p] = src[ch * hw + idx[p]];
    }
  }
  const std::size_t ifm = fm.id();
  return fm.tape()->record(std::move(out), {fm}, [=, source = std::move(source)](Tape<T>& t, std::size_t self) {
    const Tensor<T>& g = t.grad(self);
    T* gfm = t.grad(ifm).ptr();
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t k = 0; k < 9; ++k) {
        const T* gk = g.ptr() + (ch * 9 + k) * hw;
        const std::size_t* idx = source.data() + k * hw;
        for (std::size_t p = 0; p < hw; ++p) gfm[ch * hw + idx[p]] += gk[p];
      }
    }
  }, "unfold3x3");
}

template <typename T>
Tensor<T> image_to_tensor(const imaging::Image& img, T shift) {
  const std::size_t h = img.height(), w = img.width(), hw = h * w;
  Tensor<T> out(Shape{3, h, w});
  const auto s = img.samples();
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t c = 0; c < 3; ++c) out[c * hw + p] = static_cast<T>(s[p * 3 + c]) + shift;
  }
  return out;
}

#define DDIR_INSTANTIATE_ENCODER(T)                                                         \
  template void init_encoder<T>(ParamStore<T>&, const std::string&, const EncoderConfig&,   \
                                std::uint64_t);                                             \
  template Var<T> encode<T>(Tape<T>&, ParamStore<T>&, const std::string&,                   \
                            const EncoderConfig&, Var<T>);                                  \
  template Var<T> unfold3x3<T>(Var<T>);                                                     \
  template Tensor<T> image_to_tensor<T>(const imaging::Image&, T);

DDIR_INSTANTIATE_ENCODER(float)
DDIR_INSTANTIATE_ENCODER(double)

#undef DDIR_INSTANTIATE_ENCODER

}  // namespace ddir::encoder
