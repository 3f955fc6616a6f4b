#include <random>

#include "ddir/cli/commands.h"
#include "ddir/encoder/encoder.h"
#include "ddir/lif/lif.h"
#include "ddir/numerics/gradcheck.h"
#include "ddir/numerics/ops.h"

namespace ddir::cli {

namespace {

using numerics::ParamStore;
using numerics::ScalarFn;
using numerics::Shape;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

Tensor<double> random_tensor(std::mt19937_64& rng, const Shape& shape, double lo = -1, double hi = 1) {
  Tensor<double> t(shape);
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.data()) v = d(rng);
  return t;
}

class Suite {
 public:
  Suite(std::uint64_t seed, double step) : rng_(seed), step_(step) {}

  std::mt19937_64& rng() { return rng_; }

  Tensor<double> rand(const Shape& shape) { return random_tensor(rng_, shape); }

  void run(const std::string& name, ParamStore<double> store, const ScalarFn& fn) {
    const numerics::GradCheckReport r = numerics::finite_diff_check(fn, store, step_);
    lines_.push_back({name, r.max_rel_error, r.elements_checked, r.elements_refined,
                      r.worst_param + "[" + std::to_string(r.worst_index) + "]", r.analytic, r.numeric,
                      r.max_rel_error < kGradcheckTolerance && r.elements_checked == store.element_count()});
  }

  std::vector<GradcheckLine> take() { return std::move(lines_); }

 private:
  std::mt19937_64 rng_;
  double step_;
  std::vector<GradcheckLine> lines_;
};

ParamStore<double> store_of(std::vector<std::pair<std::string, Tensor<double>>> items) {
  ParamStore<double> s;
  for (auto& [n, t] : items) s.add(n, std::move(t));
  return s;
}

// Mean |op output - target| with a fixed random target turns any op into a
// scalar with non-trivial gradients everywhere.
template <typename F>
ScalarFn against_target(Tensor<double> target, F op) {
  return [target, op](Tape<double>& t, ParamStore<double>& p) { return l1_loss(op(t, p), t.constant(target)); };
}

void op_checks(Suite& s) {
  using namespace numerics;
  auto P = [](Tape<double>& t, ParamStore<double>& p, const char* n) { return t.parameter(p, n); };

  s.run("conv2d", store_of({{"x", s.rand({3, 5, 4})}, {"w", s.rand({2, 3, 3, 3})}, {"b", s.rand({2})}}),
        against_target(s.rand({2, 5, 4}), [P](Tape<double>& t, ParamStore<double>& p) {
          return conv2d(P(t, p, "x"), P(t, p, "w"), P(t, p, "b"), 1);
        }));
  s.run("linear", store_of({{"x", s.rand({7, 5})}, {"w", s.rand({4, 5})}, {"b", s.rand({4})}}),
        against_target(s.rand({7, 4}), [P](Tape<double>& t, ParamStore<double>& p) {
          return linear(P(t, p, "x"), P(t, p, "w"), P(t, p, "b"));
        }));
  s.run("relu", store_of({{"x", s.rand({6, 5})}}),
        against_target(s.rand({6, 5}), [P](Tape<double>& t, ParamStore<double>& p) { return relu(P(t, p, "x")); }));
  s.run("add+sum", store_of({{"a", s.rand({4, 3})}, {"b", s.rand({4, 3})}}),
        [P](Tape<double>& t, ParamStore<double>& p) { return sum(relu(add(P(t, p, "a"), P(t, p, "b")))); });
  s.run("concat_channels+slice_channels", store_of({{"a", s.rand({5, 2})}, {"b", s.rand({5, 3})}}),
        against_target(s.rand({5, 3}), [P](Tape<double>& t, ParamStore<double>& p) {
          return slice_channels(concat_channels(P(t, p, "a"), P(t, p, "b")), 1, 4);
        }));
  s.run("concat_rows", store_of({{"a", s.rand({2, 3})}, {"b", s.rand({4, 3})}}),
        against_target(s.rand({6, 3}), [P](Tape<double>& t, ParamStore<double>& p) {
          return concat_rows<double>({P(t, p, "a"), P(t, p, "b")});
        }));
  s.run("global_average_pool", store_of({{"x", s.rand({4, 3, 5})}}),
        against_target(s.rand({4}), [P](Tape<double>& t, ParamStore<double>& p) {
          return global_average_pool(P(t, p, "x"));
        }));
  s.run("l1_loss", store_of({{"a", s.rand({5, 3})}, {"b", s.rand({5, 3})}}),
        [P](Tape<double>& t, ParamStore<double>& p) { return l1_loss(P(t, p, "a"), P(t, p, "b")); });
  s.run("broadcast_rows+repeat_rows", store_of({{"v", s.rand({3})}, {"x", s.rand({2, 3})}}),
        against_target(s.rand({10, 3}), [P](Tape<double>& t, ParamStore<double>& p) {
          return concat_rows<double>({broadcast_rows(P(t, p, "v"), 4), repeat_rows(P(t, p, "x"), 3)});
        }));

  std::vector<std::size_t> positions, rows;
  for (int i = 0; i < 9; ++i) positions.push_back(s.rng()() % 12);
  for (int i = 0; i < 8; ++i) rows.push_back(s.rng()() % 5);
  s.run("gather_positions", store_of({{"fm", s.rand({3, 3, 4})}}),
        against_target(s.rand({9, 3}), [P, positions](Tape<double>& t, ParamStore<double>& p) {
          return gather_positions(P(t, p, "fm"), positions);
        }));
  s.run("gather_rows", store_of({{"x", s.rand({5, 3})}}),
        against_target(s.rand({8, 3}), [P, rows](Tape<double>& t, ParamStore<double>& p) {
          return gather_rows(P(t, p, "x"), rows);
        }));
  std::vector<double> weights;
  std::uniform_real_distribution<double> unit(0, 1);
  for (int i = 0; i < 12; ++i) weights.push_back(unit(s.rng()));
  s.run("blend_rows", store_of({{"x", s.rand({12, 3})}}),
        against_target(s.rand({3, 3}), [P, weights](Tape<double>& t, ParamStore<double>& p) {
          return blend_rows(P(t, p, "x"), weights, 4);
        }));
}

void module_checks(Suite& s, lif::AreaRule rule) {
  using namespace numerics;
  const encoder::EncoderConfig enc{3, 1, 3};
  ParamStore<double> es;
  encoder::init_encoder(es, "enc", enc, 5);
  es.add("x", s.rand({3, 5, 4}));
  s.run("encode+unfold3x3", std::move(es), against_target(s.rand({27, 5, 4}), [enc](Tape<double>& t, ParamStore<double>& p) {
          return encoder::unfold3x3(encoder::encode(t, p, "enc", enc, t.parameter(p, "x")));
        }));

  const lif::MlpConfig mlp{6, 5, 3, 3};
  ParamStore<double> ms;
  lif::init_mlp(ms, "mlp", mlp, 6);
  ms.add("x", s.rand({7, 6}));
  s.run("mlp_forward", std::move(ms), against_target(s.rand({7, 3}), [mlp](Tape<double>& t, ParamStore<double>& p) {
          return lif::mlp_forward(t, p, "mlp", mlp, t.parameter(p, "x"));
        }));

  const lif::MlpConfig dec{2 + 3 + 4, 6, 3, 3};
  ParamStore<double> ds;
  lif::init_mlp(ds, "dec", dec, 7);
  ds.add("fm", s.rand({2, 3, 4}));
  ds.add("extra", s.rand({3}));
  lif::QueryBatch q;
  std::uniform_real_distribution<double> coord(-1, 1);
  for (int i = 0; i < 9; ++i) {
    q.coords.push_back(coord(s.rng()));
    q.coords.push_back(coord(s.rng()));
    q.cells.push_back(2.0 / 7);
    q.cells.push_back(2.0 / 9);
  }
  s.run(rule == lif::AreaRule::kDiagonal ? "local_ensemble_decode" : "local_ensemble_decode (same-corner areas)",
        std::move(ds), against_target(s.rand({9, 3}), [dec, q, rule](Tape<double>& t, ParamStore<double>& p) {
          return lif::local_ensemble_decode(t, p, "dec", dec, t.parameter(p, "fm"), {t.parameter(p, "extra")}, q, rule);
        }));
}

model::TrainItem toy_item(std::mt19937_64& rng) {
  model::TrainItem item;
  item.lr = imaging::Image(4, 4);
  std::uniform_real_distribution<float> unit(0, 1);
  for (float& v : item.lr.samples()) v = unit(rng);
  item.hr_height = 8;
  item.hr_width = 8;
  const std::vector<double> grid = lif::coord_grid(8, 8);
  std::vector<std::size_t> order(64);
  for (std::size_t i = 0; i < 64; ++i) order[i] = i;
  for (std::size_t i = 0; i < 10; ++i) std::swap(order[i], order[i + rng() % (64 - i)]);
  for (std::size_t i = 0; i < 10; ++i) {
    item.queries.coords.push_back(grid[2 * order[i]]);
    item.queries.coords.push_back(grid[2 * order[i] + 1]);
    item.queries.cells.push_back(0.25);
    item.queries.cells.push_back(0.25);
    for (int c = 0; c < 3; ++c) item.queries.targets.push_back(unit(rng));
  }
  return item;
}

void model_checks(Suite& s, const RunConfig& cfg) {
  struct Wiring {
    const char* name;
    bool deformation, appearance, into_sr, stop;
  };
  const Wiring wirings[] = {
      {"joint loss: LIIF (both toggles off)", false, false, false, false},
      {"joint loss: deformation field only", true, false, false, false},
      {"joint loss: appearance embedding only", false, true, false, false},
      {"joint loss: full model", true, true, false, false},
      {"joint loss: full model, embedding into SR", true, true, true, false},
  };
  const std::vector<model::TrainItem> batch{toy_item(s.rng())};
  for (const Wiring& w : wirings) {
    model::DdirConfig m;
    m.enc_sr = {3, 1, 3};
    m.enc_def = {2, 1, 3};
    m.hidden_sr = 6;
    m.hidden_def = 5;
    m.layers = 3;
    m.use_deformation_field = w.deformation;
    m.use_appearance_embedding = w.appearance;
    m.embedding_into_sr = w.into_sr;
    m.stop_deformation_gradient = w.stop;
    m.area_rule = cfg.model.area_rule;
    model::DdirModel<double> toy(m, cfg.gradcheck_seed + 1);
    s.run(w.name, toy.params(), [m, batch](Tape<double>& t, ParamStore<double>& p) {
      return model::forward_train(t, m, p, batch).loss_total;
    });
  }
}

}  // namespace

std::vector<GradcheckLine> cmd_gradcheck(const RunConfig& cfg) {
  Suite suite(cfg.gradcheck_seed, cfg.gradcheck_step);
  op_checks(suite);
  module_checks(suite, lif::AreaRule::kDiagonal);
  module_checks(suite, lif::AreaRule::kSameCorner);
  model_checks(suite, cfg);
  return suite.take();
}

}  // namespace ddir::cli
