#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "ddir/encoder/encoder.h"
#include "ddir/numerics/gradcheck.h"
#include "test_support.h"

using namespace ddir;
using namespace ddir::encoder;
using namespace ddir::numerics;
using ddir::testing::max_abs_diff;
using ddir::testing::random_tensor;

namespace {

template <typename T>
Tensor<T> run_encoder(ParamStore<T>& store, const EncoderConfig& cfg, const Tensor<T>& x) {
  Tape<T> tape;
  tape.set_grad_enabled(false);
  return encode(tape, store, "enc", cfg, tape.constant(x)).value();
}

Tensor<double> unfold_oracle(const Tensor<double>& fm) {
  const long c = long(fm.extent(0)), h = long(fm.extent(1)), w = long(fm.extent(2));
  Tensor<double> out(Shape{std::size_t(9 * c), std::size_t(h), std::size_t(w)});
  for (long ch = 0; ch < c; ++ch) {
    for (long y = 0; y < h; ++y) {
      for (long x = 0; x < w; ++x) {
        int k = 0;
        for (long dy = -1; dy <= 1; ++dy) {
          for (long dx = -1; dx <= 1; ++dx, ++k) {
            const long sy = std::min(std::max(y + dy, 0L), h - 1);
            const long sx = std::min(std::max(x + dx, 0L), w - 1);
            out(ch * 9 + k, y, x) = fm(ch, sy, sx);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("init_encoder creates the documented parameter set") {
  ParamStore<float> s;
  init_encoder(s, "enc", EncoderConfig{8, 2, 3}, 1);
  CHECK(s.size() == 2 * (1 + 2 * 2 + 1));
  CHECK(s.value("enc.head.w").shape() == Shape{8, 3, 3, 3});
  CHECK(s.value("enc.block1.conv2.b").shape() == Shape{8});
  CHECK(s.value("enc.tail.w").shape() == Shape{8, 8, 3, 3});
  const float bound = 1.0f / std::sqrt(27.0f);
  for (float v : s.value("enc.head.w").data()) CHECK(std::abs(v) <= bound);

  ParamStore<double> d;
  init_encoder(d, "enc", EncoderConfig{8, 2, 3}, 1);
  CHECK(d.value("enc.head.w").cast<float>() == s.value("enc.head.w"));

  ParamStore<float> other;
  init_encoder(other, "enc", EncoderConfig{8, 2, 3}, 2);
  CHECK_FALSE(other.value("enc.head.w") == s.value("enc.head.w"));
  CHECK_THROWS_AS(init_encoder(s, "x", EncoderConfig{0, 1, 3}, 1), UsageError);
}

TEST_CASE("encode: zero parameters give a zero map") {
  std::mt19937 rng(1);
  EncoderConfig cfg{6, 2, 3};
  ParamStore<float> s;
  init_encoder(s, "enc", cfg, 3);
  for (const auto& n : s.names()) s.value(n).fill(0);
  Tensor<float> out = run_encoder(s, cfg, random_tensor<float>(rng, {3, 9, 7}));
  CHECK(out.shape() == Shape{6, 9, 7});
  for (float v : out.data()) CHECK(v == 0.0f);
}

TEST_CASE("encode: output keeps the input's spatial size") {
  std::mt19937 rng(2);
  EncoderConfig cfg{4, 1, 3};
  ParamStore<float> s;
  init_encoder(s, "enc", cfg, 3);
  for (auto [h, w] : {std::pair<std::size_t, std::size_t>{8, 8}, {11, 7}, {48, 48}}) {
    CHECK(run_encoder(s, cfg, random_tensor<float>(rng, {3, h, w})).shape() == Shape{4, h, w});
  }
}

TEST_CASE("encode: equals a hand-composed conv/relu sequence") {
  std::mt19937 rng(3);
  EncoderConfig cfg{4, 1, 3};
  ParamStore<float> s;
  init_encoder(s, "enc", cfg, 7);
  const Tensor<float> x = random_tensor<float>(rng, {3, 10, 9});

  Tape<float> t;
  auto p = [&](const char* n) { return t.parameter(s, std::string("enc.") + n); };
  auto in = t.constant(x);
  auto head = conv2d(in, p("head.w"), p("head.b"), 1);
  auto c1 = relu(conv2d(head, p("block0.conv1.w"), p("block0.conv1.b"), 1));
  auto c2 = conv2d(c1, p("block0.conv2.w"), p("block0.conv2.b"), 1);
  auto r = add(head, c2);
  auto expected = add(conv2d(r, p("tail.w"), p("tail.b"), 1), head);

  CHECK(run_encoder(s, cfg, x) == expected.value());
}

TEST_CASE("encode: interior features are translation consistent") {
  std::mt19937 rng(4);
  for (EncoderConfig cfg : {EncoderConfig{4, 1, 3}, EncoderConfig{8, 4, 3}}) {
    ParamStore<float> s;
    init_encoder(s, "enc", cfg, 11);
    const std::size_t n = 36;
    const Tensor<float> base = random_tensor<float>(rng, {3, n + 1, n + 1});
    Tensor<float> a(Shape{3, n, n}), b(Shape{3, n, n});
    for (std::size_t c = 0; c < 3; ++c) {
      for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
          a(c, y, x) = base(c, y, x);
          b(c, y, x) = base(c, y + 1, x + 1);
        }
      }
    }
    const Tensor<float> fa = run_encoder(s, cfg, a), fb = run_encoder(s, cfg, b);
    // Each 3x3 layer widens the receptive field by one pixel per side.
    const std::size_t border = 2 + 2 * cfg.blocks;
    double worst = 0;
    for (std::size_t c = 0; c < cfg.channels; ++c) {
      for (std::size_t y = border; y + 1 + border < n; ++y) {
        for (std::size_t x = border; x + 1 + border < n; ++x) {
          worst = std::max(worst, double(std::abs(fa(c, y + 1, x + 1) - fb(c, y, x))));
        }
      }
    }
    CHECK(worst == 0.0);
  }
}

TEST_CASE("encode: parameter shapes must match the config") {
  ParamStore<float> s;
  init_encoder(s, "enc", EncoderConfig{4, 1, 3}, 1);
  Tape<float> t;
  auto x = t.constant(Tensor<float>(Shape{3, 5, 5}));
  CHECK_THROWS_AS(encode(t, s, "enc", EncoderConfig{5, 1, 3}, x), UsageError);
  CHECK_THROWS_AS(encode(t, s, "enc", EncoderConfig{4, 2, 3}, x), UsageError);
  CHECK_THROWS_AS(encode(t, s, "missing", EncoderConfig{4, 1, 3}, x), UsageError);
}

TEST_CASE("unfold3x3") {
  Tape<double> t;
  SUBCASE("constant map") {
    auto u = unfold3x3(t.constant(Tensor<double>(Shape{2, 4, 5}, 0.25)));
    CHECK(u.shape() == Shape{18, 4, 5});
    for (double v : u.value().data()) CHECK(v == 0.25);
  }
  SUBCASE("center pixel of a 3x3 map lists its neighbourhood in row-major order") {
    auto u = unfold3x3(t.constant(Tensor<double>(Shape{1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9})));
    for (std::size_t k = 0; k < 9; ++k) CHECK(u.value()(k, 1, 1) == double(k + 1));
    // Top-left corner replicates its edge.
    CHECK(u.value()(0, 0, 0) == 1);
    CHECK(u.value()(8, 0, 0) == 5);
  }
  SUBCASE("random maps match the gather-loop oracle") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t c = 1 + rng() % 4, h = 1 + rng() % 7, w = 1 + rng() % 7;
      const Tensor<double> fm = random_tensor<double>(rng, {c, h, w});
      const Tensor<double> u = unfold3x3(t.constant(fm)).value();
      CHECK(u == unfold_oracle(fm));
      // The centre group is the original map.
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t p = 0; p < h * w; ++p) CHECK(u[(ch * 9 + 4) * h * w + p] == fm[ch * h * w + p]);
      }
    }
  }
  CHECK_THROWS_AS(unfold3x3(t.constant(Tensor<double>(Shape{4, 4}))), UsageError);
}

TEST_CASE("encoder and unfold gradients pass finite differences") {
  std::mt19937 rng(6);
  EncoderConfig cfg{3, 1, 3};
  ParamStore<double> s;
  init_encoder(s, "enc", cfg, 5);
  s.add("x", random_tensor<double>(rng, {3, 5, 4}));
  s.add("target", random_tensor<double>(rng, {27, 5, 4}));
  ScalarFn fn = [&](Tape<double>& t, ParamStore<double>& p) {
    auto fm = encode(t, p, "enc", cfg, t.parameter(p, "x"));
    return l1_loss(unfold3x3(fm), t.parameter(p, "target"));
  };
  GradCheckReport r = finite_diff_check(fn, s);
  INFO(r.worst_param << "[" << r.worst_index << "] a=" << r.analytic << " n=" << r.numeric);
  CHECK(r.max_rel_error < 1e-5);
}

TEST_CASE("image_to_tensor is planar with an optional shift") {
  imaging::Image img(2, 3);
  for (std::size_t i = 0; i < img.samples().size(); ++i) img.samples()[i] = float(i) / 32;
  const Tensor<float> t = image_to_tensor<float>(img, -0.5f);
  CHECK(t.shape() == Shape{3, 2, 3});
  for (std::size_t y = 0; y < 2; ++y) {
    for (std::size_t x = 0; x < 3; ++x) {
      for (std::size_t c = 0; c < 3; ++c) CHECK(t(c, y, x) == img.at(y, x, c) - 0.5f);
    }
  }
}
