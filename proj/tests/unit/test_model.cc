#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "ddir/imaging/resample.h"
#include "ddir/model/ddir.h"
#include "ddir/model/liif.h"
#include "ddir/numerics/adam.h"
#include "ddir/numerics/gradcheck.h"
#include "test_support.h"

using namespace ddir;
using namespace ddir::model;
using namespace ddir::numerics;
using ddir::testing::random_image;
using ddir::testing::random_tensor;

namespace {

DdirConfig toy_config(bool deformation = true, bool appearance = true) {
  DdirConfig cfg;
  cfg.enc_sr = {3, 1, 3};
  cfg.enc_def = {2, 1, 3};
  cfg.hidden_sr = 6;
  cfg.hidden_def = 5;
  cfg.layers = 3;
  cfg.use_deformation_field = deformation;
  cfg.use_appearance_embedding = appearance;
  return cfg;
}

// An LR image with `n` random query pixels of its hr_h x hr_w counterpart.
TrainItem random_item(std::mt19937& rng, std::size_t lr_h, std::size_t lr_w, std::size_t hr_h,
                      std::size_t hr_w, std::size_t n) {
  TrainItem item;
  item.lr = random_image(rng, lr_h, lr_w);
  item.hr_height = hr_h;
  item.hr_width = hr_w;
  const auto grid = lif::coord_grid(hr_h, hr_w);
  std::uniform_real_distribution<float> colour(0, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t p = rng() % (hr_h * hr_w);
    item.queries.coords.insert(item.queries.coords.end(), {grid[2 * p], grid[2 * p + 1]});
    item.queries.cells.insert(item.queries.cells.end(), {2.0 / hr_h, 2.0 / hr_w});
    for (int c = 0; c < 3; ++c) item.queries.targets.push_back(colour(rng));
  }
  return item;
}

bool shares_prefix(const std::string& name, const std::string& prefix) {
  return name.compare(0, prefix.size() + 1, prefix + ".") == 0;
}

}  // namespace

TEST_CASE("config wiring and validation") {
  DdirConfig cfg = toy_config();
  CHECK(cfg.mlp_sr().input == 9 * 3 + 3 + 4);
  CHECK(cfg.mlp_def().input == 9 * 2 + 3 + 4);
  cfg.embedding_into_sr = true;
  CHECK(cfg.mlp_sr().input == 9 * 3 + 3 + 3 + 4);
  CHECK(toy_config(false, true).mlp_sr().input == 9 * 3 + 3 + 4);
  CHECK(toy_config(false, false).mlp_sr().input == 9 * 3 + 4);
  CHECK(toy_config(true, false).mlp_def().input == 9 * 2 + 4);

  DdirConfig bad = toy_config(false, true);
  bad.embedding_into_sr = true;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = toy_config(false, false);
  bad.stop_deformation_gradient = true;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("the two branches own disjoint parameter groups") {
  DdirModel<float> full(toy_config(), 1);
  std::set<std::string> groups;
  for (const auto& n : full.params().names()) groups.insert(n.substr(0, n.find('.')));
  CHECK(groups == std::set<std::string>{"enc_def", "enc_sr", "mlp_def", "mlp_sr"});

  DdirModel<float> plain(toy_config(false, false), 1);
  for (const auto& n : plain.params().names()) {
    CHECK((shares_prefix(n, "enc_sr") || shares_prefix(n, "mlp_sr")));
  }
  // Same seed, same weights for the shared encoder.
  CHECK(plain.params().value("enc_sr.head.w") == full.params().value("enc_sr.head.w"));
  CHECK_FALSE(full.params().value("enc_sr.head.b") == full.params().value("enc_def.head.b"));

  CHECK_THROWS_AS(DdirModel<float>(toy_config(), plain.params()), UsageError);
  CHECK_NOTHROW(DdirModel<float>(toy_config(), full.params()));
}

TEST_CASE("appearance_embedding") {
  Tape<double> t;
  CHECK(appearance_embedding(t.constant(Tensor<double>(Shape{4, 3, 3}))).value().vec() ==
        std::vector<double>(4, 0.0));
  Tensor<double> fm(Shape{3, 2, 5});
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t p = 0; p < 10; ++p) fm[c * 10 + p] = 0.5 * double(c) - 0.25;
  }
  CHECK(appearance_embedding(t.constant(fm)).value().vec() == std::vector<double>{-0.25, 0.25, 0.75});

  std::mt19937 rng(1);
  const Tensor<double> r = random_tensor<double>(rng, {5, 7, 6});
  const Tensor<double> e = appearance_embedding(t.constant(r)).value();
  for (std::size_t c = 0; c < 5; ++c) {
    double s = 0;
    for (std::size_t p = 0; p < 42; ++p) s += r[c * 42 + p];
    CHECK(std::abs(e[c] - s / 42) < 1e-12);
  }
}

TEST_CASE("appearance shift through a first-conv-only zero-bias encoder") {
  // GAP(conv(x + c)) - GAP(conv(x)) = sum over taps of w * c * (in-range
  // positions of that tap) / (H * W); tap offset (dy, dx) is in range at
  // (H - |dy|) * (W - |dx|) positions under zero padding.
  std::mt19937 rng(2);
  const std::size_t h = 6, w = 9;
  const Tensor<double> weight = random_tensor<double>(rng, {4, 3, 3, 3});
  const Tensor<double> x = random_tensor<double>(rng, {3, h, w});
  const double offset[3] = {0.05, -0.03, 0.08};
  Tensor<double> shifted = x;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t p = 0; p < h * w; ++p) shifted[c * h * w + p] += offset[c];
  }
  Tape<double> t;
  const auto bias = t.constant(Tensor<double>(Shape{4}));
  const auto wv = t.constant(weight);
  const auto base = appearance_embedding(conv2d(t.constant(x), wv, bias, 1)).value();
  const auto moved = appearance_embedding(conv2d(t.constant(shifted), wv, bias, 1)).value();
  for (std::size_t o = 0; o < 4; ++o) {
    double expected = 0;
    for (std::size_t c = 0; c < 3; ++c) {
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dx = -1; dx <= 1; ++dx) {
          const double count = double((long(h) - std::abs(dy)) * (long(w) - std::abs(dx)));
          expected += weight[((o * 3 + c) * 3 + (dy + 1)) * 3 + (dx + 1)] * offset[c] * count;
        }
      }
    }
    CHECK(std::abs((moved[o] - base[o]) - expected / double(h * w)) < 1e-12);
  }
}

TEST_CASE("deformation_target") {
  std::mt19937 rng(3);
  const imaging::Image lr = random_image(rng, 5, 6);
  const imaging::Image up = imaging::bicubic_resize(lr, {10, 12});
  lif::QueryBatch q = lif::grid_queries(10, 12);
  std::vector<float> gt(up.samples().begin(), up.samples().end());

  const Tensor<float> zero = deformation_target(gt, lr, q, 10, 12);
  for (float v : zero.data()) CHECK(v == 0.0f);

  std::vector<float> lifted = gt;
  for (float& v : lifted) v += 0.1f;
  const Tensor<float> tenth = deformation_target(lifted, lr, q, 10, 12);
  for (float v : tenth.data()) CHECK(v == doctest::Approx(0.1f).epsilon(1e-6));

  // Random GT at random pixels against pixel-indexed subtraction.
  lif::QueryBatch sub;
  std::vector<float> rgt;
  std::vector<std::size_t> pixels;
  for (int i = 0; i < 30; ++i) {
    const std::size_t p = rng() % 120;
    pixels.push_back(p);
    sub.coords.insert(sub.coords.end(), {q.coords[2 * p], q.coords[2 * p + 1]});
    sub.cells.insert(sub.cells.end(), {q.cells[0], q.cells[1]});
    for (int c = 0; c < 3; ++c) rgt.push_back(std::uniform_real_distribution<float>(0, 1)(rng));
  }
  const Tensor<float> d = deformation_target(rgt, lr, sub, 10, 12);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      CHECK(d(i, c) == rgt[3 * i + c] - up.samples()[pixels[i] * 3 + c]);
    }
  }

  sub.coords[0] += 0.01;
  CHECK_THROWS_AS(deformation_target(rgt, lr, sub, 10, 12), UsageError);
}

TEST_CASE("total_loss") {
  Tape<double> t;
  auto s = [&](double v) { return t.constant(Tensor<double>::scalar(v)); };
  CHECK(total_loss(s(0.3), s(0.2)).value().item() == 0.3 + 0.2);
  CHECK(total_loss(s(0.7), s(0)).value().item() == 0.7);
  std::mt19937 rng(4);
  for (int i = 0; i < 20; ++i) {
    const double a = std::uniform_real_distribution<double>(0, 2)(rng), b = std::uniform_real_distribution<double>(0, 2)(rng);
    CHECK(total_loss(s(a), s(b)).value().item() == a + b);
  }
}

TEST_CASE("forward_train") {
  std::mt19937 rng(5);
  std::vector<TrainItem> batch{random_item(rng, 4, 4, 8, 8, 12), random_item(rng, 5, 4, 8, 7, 9)};

  SUBCASE("loss_total is the exact sum of the two losses") {
    DdirModel<float> m(toy_config(), 2);
    Tape<float> t;
    auto out = forward_train(t, m, batch);
    CHECK(out.sr_pred.shape() == Shape{21, 3});
    CHECK(out.def_pred.shape() == Shape{21, 3});
    CHECK(out.loss_total.value().item() == out.loss_sr.value().item() + out.loss_def.value().item());
  }
  SUBCASE("both toggles off reduce to the SR loss") {
    DdirModel<float> m(toy_config(false, false), 2);
    Tape<float> t;
    auto out = forward_train(t, m, batch);
    CHECK_FALSE(out.def_pred.valid());
    CHECK(out.loss_def.value().item() == 0.0f);
    CHECK(out.loss_total.value().item() == out.loss_sr.value().item());
  }
  SUBCASE("a zero model predicts zero and its loss is the mean target") {
    DdirModel<float> m(toy_config(), 2);
    for (const auto& n : m.params().names()) m.params().value(n).fill(0);
    Tape<float> t;
    auto out = forward_train(t, m, batch);
    for (float v : out.sr_pred.value().data()) CHECK(v == 0.0f);
    double mean = 0;
    std::size_t n = 0;
    for (const auto& item : batch) {
      for (float v : item.queries.targets) mean += std::abs(v), ++n;
    }
    CHECK(out.loss_sr.value().item() == doctest::Approx(mean / double(n)).epsilon(1e-6));
  }
  SUBCASE("queries without targets are rejected") {
    DdirModel<float> m(toy_config(), 2);
    std::vector<TrainItem> bad = batch;
    bad[0].queries.targets.clear();
    Tape<float> t;
    CHECK_THROWS_AS(forward_train(t, m, bad), UsageError);
  }
}

TEST_CASE("the full joint loss passes finite differences in 64-bit") {
  std::mt19937 rng(6);
  std::vector<TrainItem> batch{random_item(rng, 4, 4, 8, 8, 10)};
  for (bool into_sr : {false, true}) {
    DdirConfig cfg = toy_config();
    cfg.embedding_into_sr = into_sr;
    DdirModel<double> m(cfg, 7);
    ScalarFn fn = [&](Tape<double>& t, ParamStore<double>& p) {
      return forward_train(t, cfg, p, batch).loss_total;
    };
    ParamStore<double>& params = m.params();
    // Every path through the network touches a given weight once, so the loss
    // is piecewise linear in each parameter and differences carry no
    // truncation error between kinks. The 0.05 step keeps the rounding noise
    // of f (a few ulp(f) / 2h) under 1e-13, the absolute error a zero
    // gradient tolerates against the 1e-8 denominator floor.
    GradCheckReport r = finite_diff_check(fn, params, 5e-2);
    INFO(r.worst_param << "[" << r.worst_index << "] a=" << r.analytic << " n=" << r.numeric);
    CHECK(r.elements_checked == params.element_count());
    CHECK(r.max_rel_error < 1e-5);
  }
}

TEST_CASE("stop_deformation_gradient blocks the SR loss from the deformation branch") {
  std::mt19937 rng(8);
  std::vector<TrainItem> batch{random_item(rng, 4, 4, 8, 8, 10)};
  for (bool stop : {false, true}) {
    DdirConfig cfg = toy_config();
    cfg.stop_deformation_gradient = stop;
    DdirModel<double> m(cfg, 3);
    Tape<double> t;
    t.backward(forward_train(t, m, batch).loss_sr);
    double mag = 0;
    for (double g : m.params().grad("mlp_def.fc0.w").data()) mag += std::abs(g);
    if (stop) {
      CHECK(mag == 0.0);
    } else {
      CHECK(mag > 0.0);
    }
  }
}

TEST_CASE("both toggles off matches the standalone LIIF baseline bitwise") {
  std::mt19937 rng(9);
  const DdirConfig cfg = toy_config(false, false);
  DdirModel<float> ddir(cfg, 11);
  LiifConfig lcfg{cfg.enc_sr, cfg.hidden_sr, cfg.layers, cfg.area_rule};
  ParamStore<float> liif;
  init_liif(liif, lcfg, 11);
  REQUIRE(liif.names() == ddir.params().names());
  AdamConfig adam;
  adam.lr = 1e-2;
  for (int step = 0; step < 3; ++step) {
    std::vector<TrainItem> batch{random_item(rng, 6, 6, 12, 12, 16), random_item(rng, 5, 7, 8, 11, 16)};
    Tape<float> ta, tb;
    auto a = forward_train(ta, ddir, batch).loss_total;
    auto b = liif_loss(tb, liif, lcfg, batch);
    CHECK(a.value().item() == b.value().item());
    ta.backward(a);
    tb.backward(b);
    adam_step(ddir.params(), adam);
    adam_step(liif, adam);
  }
  for (const auto& n : liif.names()) CHECK(liif.value(n) == ddir.params().value(n));
}

TEST_CASE("inference") {
  std::mt19937 rng(10);
  DdirModel<float> m(toy_config(), 12);
  const imaging::Image lr = random_image(rng, 7, 5);

  const imaging::Image same = infer_full(m, lr, 1.0);
  CHECK(same.height() == 7);
  CHECK(same.width() == 5);
  for (float v : same.samples()) CHECK((v >= 0.0f && v <= 1.0f));

  const Prediction big = predict(m, lr, 13, 9);
  const Prediction tiny = predict(m, lr, 13, 9, 1);
  CHECK(big.sr == tiny.sr);
  CHECK(big.deformation == tiny.deformation);
  CHECK(big.sr.size() == 13 * 9 * 3);
  CHECK(predict(m, lr, 13, 9, 7).sr == big.sr);

  CHECK_THROWS_AS(infer_full(m, lr, 0.0), UsageError);
  CHECK_THROWS_AS(infer_full(m, lr, -2.0), UsageError);
  CHECK_THROWS_AS(predict(m, random_image(rng, 1, 5), 3, 3), UsageError);
}

TEST_CASE("inference matches the training-mode decode at the same queries") {
  std::mt19937 rng(11);
  DdirModel<float> m(toy_config(), 13);
  TrainItem item = random_item(rng, 6, 5, 12, 10, 0);
  item.queries = lif::grid_queries(12, 10);
  item.queries.targets.assign(3 * item.queries.size(), 0.5f);
  Tape<float> t;
  t.set_grad_enabled(false);
  auto out = forward_train(t, m, {item});
  const Prediction p = predict(m, item.lr, 12, 10);
  double worst = 0;
  for (std::size_t i = 0; i < p.sr.size(); ++i) {
    worst = std::max(worst, double(std::abs(p.sr[i] - out.sr_pred.value()[i])));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("output_dims follows round(scale * extent)") {
  struct Case {
    std::size_t h, w;
    double s;
    std::size_t eh, ew;
  };
  // Published LR/HR resolution pairs.
  for (const Case& c : {Case{480, 730, 1.7, 816, 1241}, Case{210, 320, 3.7, 777, 1184},
                        Case{7, 5, 1.0, 7, 5}, Case{48, 48, 1.5, 72, 72}}) {
    const OutputDims d = output_dims(c.h, c.w, c.s);
    CHECK(d.height == c.eh);
    CHECK(d.width == c.ew);
  }
  CHECK_THROWS_AS(output_dims(4, 4, 0.0), UsageError);
  CHECK_THROWS_AS(output_dims(4, 4, 0.01), UsageError);
}
