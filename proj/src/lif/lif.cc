#include "ddir/lif/lif.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ddir/numerics/init.h"

namespace ddir::lif {

using numerics::Shape;

void QueryBatch::validate() const {
  if (coords.size() % 2 != 0) throw UsageError("query coords must come in (y, x) pairs");
  const std::size_t q = size();
  if (cells.size() != 2 * q) throw UsageError("one (y, x) cell per query required");
  if (!targets.empty() && targets.size() != 3 * q) {
    throw UsageError("targets must hold 3 values per query");
  }
  for (double c : coords) {
    if (!(c >= -1.0 && c <= 1.0)) throw UsageError("query coordinate outside [-1, 1]");
  }
  for (double c : cells) {
    if (!(c > 0.0)) throw UsageError("query cells must be positive");
  }
}

QueryBatch QueryBatch::slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw UsageError("query slice out of range");
  QueryBatch out;
  out.coords.assign(coords.begin() + 2 * begin, coords.begin() + 2 * end);
  out.cells.assign(cells.begin() + 2 * begin, cells.begin() + 2 * end);
  if (has_targets()) out.targets.assign(targets.begin() + 3 * begin, targets.begin() + 3 * end);
  return out;
}

std::vector<double> coord_grid(std::size_t h, std::size_t w) {
  if (h == 0 || w == 0) throw UsageError("coord_grid extents must be positive");
  std::vector<double> out(2 * h * w);
  for (std::size_t i = 0; i < h; ++i) {
    const double y = -1.0 + static_cast<double>(2 * i + 1) / static_cast<double>(h);
    for (std::size_t j = 0; j < w; ++j) {
      out[2 * (i * w + j)] = y;
      out[2 * (i * w + j) + 1] = -1.0 + static_cast<double>(2 * j + 1) / static_cast<double>(w);
    }
  }
  return out;
}

QueryBatch grid_queries(std::size_t h, std::size_t w) {
  QueryBatch q;
  q.coords = coord_grid(h, w);
  q.cells.resize(q.coords.size());
  for (std::size_t i = 0; i < h * w; ++i) {
    q.cells[2 * i] = 2.0 / static_cast<double>(h);
    q.cells[2 * i + 1] = 2.0 / static_cast<double>(w);
  }
  return q;
}

void MlpConfig::validate() const {
  if (layers < 2) throw UsageError("MLP needs at least 2 layers");
  if (hidden == 0 || input == 0 || output == 0) throw UsageError("MLP widths must be >= 1");
}

namespace {

std::size_t layer_in(const MlpConfig& cfg, std::size_t l) { return l == 0 ? cfg.input : cfg.hidden; }
std::size_t layer_out(const MlpConfig& cfg, std::size_t l) {
  return l + 1 == cfg.layers ? cfg.output : cfg.hidden;
}

std::string fc(const std::string& prefix, std::size_t l, const char* what) {
  return prefix + ".fc" + std::to_string(l) + "." + what;
}

template <typename T>
void check_mlp_params(const ParamStore<T>& store, const std::string& prefix, const MlpConfig& cfg) {
  cfg.validate();
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const Shape w{layer_out(cfg, l), layer_in(cfg, l)}, b{layer_out(cfg, l)};
    if (store.value(fc(prefix, l, "w")).shape() != w || store.value(fc(prefix, l, "b")).shape() != b) {
      throw UsageError("MLP parameters under '" + prefix + "' do not match the config at layer " +
                       std::to_string(l));
    }
  }
}

// Layers [1, layers) applied to the first layer's pre-activation.
template <typename T>
Var<T> mlp_rest(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                const MlpConfig& cfg, Var<T> h) {
  for (std::size_t l = 1; l < cfg.layers; ++l) {
    h = numerics::linear(numerics::relu(h), tape.parameter(store, fc(prefix, l, "w")),
                         tape.parameter(store, fc(prefix, l, "b")));
  }
  return h;
}

double snap(double u) {
  const double r = std::round(u);
  return std::abs(u - r) < 1e-9 ? r : u;
}

// Lower corner index, fractional offset in [0, 1] and the unclamped
// continuous index along one axis.
struct AxisSplit {
  std::size_t lower;
  double frac;
  double index;
};

AxisSplit split_axis(double q, std::size_t n) {
  const double u = snap(((q + 1.0) * static_cast<double>(n) - 1.0) / 2.0);
  const double uc = std::clamp(u, 0.0, static_cast<double>(n - 1));
  const std::size_t lower = std::min(static_cast<std::size_t>(std::floor(uc)), n - 2);
  return {lower, uc - static_cast<double>(lower), u};
}

}  // namespace

template <typename T>
void init_mlp(ParamStore<T>& store, const std::string& prefix, const MlpConfig& cfg,
              std::uint64_t seed) {
  cfg.validate();
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::size_t in = layer_in(cfg, l), out = layer_out(cfg, l);
    numerics::add_uniform(store, fc(prefix, l, "w"), Shape{out, in}, in, seed);
    numerics::add_uniform(store, fc(prefix, l, "b"), Shape{out}, in, seed);
  }
}

template <typename T>
Var<T> mlp_forward(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                   const MlpConfig& cfg, Var<T> input) {
  check_mlp_params(store, prefix, cfg);
  if (input.shape().size() != 2 || input.shape()[1] != cfg.input) {
    throw UsageError("mlp_forward: input " + numerics::shape_string(input.shape()) +
                     " does not have width " + std::to_string(cfg.input));
  }
  const Var<T> h = numerics::linear(input, tape.parameter(store, fc(prefix, 0, "w")),
                                    tape.parameter(store, fc(prefix, 0, "b")));
  return mlp_rest(tape, store, prefix, cfg, h);
}

std::array<Corner, 4> ensemble_corners(double qy, double qx, std::size_t h, std::size_t w,
                                       AreaRule rule) {
  if (h < 2 || w < 2) throw UsageError("local ensemble needs a latent grid of at least 2 x 2");
  const AxisSplit sy = split_axis(qy, h), sx = split_axis(qx, w);
  std::array<Corner, 4> out{};
  for (std::size_t a = 0; a < 2; ++a) {
    for (std::size_t b = 0; b < 2; ++b) {
      const bool diag = rule == AreaRule::kDiagonal;
      const double wy = (a == 1) == diag ? sy.frac : 1.0 - sy.frac;
      const double wx = (b == 1) == diag ? sx.frac : 1.0 - sx.frac;
      const std::size_t i = sy.lower + a, j = sx.lower + b;
      out[a * 2 + b] = Corner{i * w + j, wy * wx, sy.index - static_cast<double>(i),
                              sx.index - static_cast<double>(j)};
    }
  }
  return out;
}

template <typename T>
Var<T> project_latents(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                       const MlpConfig& cfg, Var<T> fm) {
  check_mlp_params(store, prefix, cfg);
  if (fm.shape().size() != 3) {
    throw UsageError("project_latents: expected D x h x w, got " + numerics::shape_string(fm.shape()));
  }
  const std::size_t d = fm.shape()[0], hw = fm.shape()[1] * fm.shape()[2];
  if (d + 4 > cfg.input) {
    throw UsageError("project_latents: " + std::to_string(d) + " latent channels do not fit an MLP input of " +
                     std::to_string(cfg.input));
  }
  std::vector<std::size_t> all(hw);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const Var<T> rows = numerics::gather_positions(fm, all);
  const Var<T> w_latent = numerics::slice_channels(tape.parameter(store, fc(prefix, 0, "w")), 0, d);
  return numerics::linear(rows, w_latent, tape.parameter(store, fc(prefix, 0, "b")));
}

template <typename T>
Var<T> decode_samples(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                      const MlpConfig& cfg, Var<T> projected,
                      const std::vector<Var<T>>& extras,
                      const std::vector<LatentSample>& samples, std::size_t group) {
  check_mlp_params(store, prefix, cfg);
  const std::size_t n = samples.size();
  if (group == 0 || n % group != 0) throw UsageError("decode_samples: sample count not divisible by group");
  if (projected.shape().size() != 2 || projected.shape()[1] != cfg.hidden) {
    throw UsageError("decode_samples: projected latents must be N x hidden");
  }
  std::size_t extra_width = 0;
  for (const Var<T>& e : extras) extra_width += e.shape().back();
  if (extra_width + 4 > cfg.input) throw UsageError("decode_samples: extras do not fit the MLP input");
  std::size_t col = cfg.input - 4 - extra_width;

  std::vector<std::size_t> positions(n);
  for (std::size_t s = 0; s < n; ++s) positions[s] = samples[s].position;
  Var<T> h = numerics::gather_rows(projected, positions);

  const Var<T> w0 = tape.parameter(store, fc(prefix, 0, "w"));
  const Var<T> no_bias = tape.constant(Tensor<T>(Shape{cfg.hidden}));
  for (const Var<T>& e : extras) {
    const std::size_t width = e.shape().back();
    const Var<T> w_extra = numerics::slice_channels(w0, col, col + width);
    col += width;
    if (e.shape().size() == 1) {
      const Var<T> term = numerics::linear(numerics::broadcast_rows(e, 1), w_extra, no_bias);
      h = numerics::add(h, numerics::repeat_rows(term, n));
    } else if (e.shape().size() == 2 && e.shape()[0] * group == n) {
      h = numerics::add(h, numerics::repeat_rows(numerics::linear(e, w_extra, no_bias), group));
    } else {
      throw UsageError("decode_samples: extra feature " + numerics::shape_string(e.shape()) +
                       " is neither shared nor one row per " + std::to_string(group) + " samples");
    }
  }

  Tensor<T> geometry(Shape{n, 4});
  for (std::size_t s = 0; s < n; ++s) {
    geometry(s, 0) = static_cast<T>(samples[s].rel_y);
    geometry(s, 1) = static_cast<T>(samples[s].rel_x);
    geometry(s, 2) = static_cast<T>(samples[s].cell_y);
    geometry(s, 3) = static_cast<T>(samples[s].cell_x);
  }
  const Var<T> w_geom = numerics::slice_channels(w0, col, col + 4);
  h = numerics::add(h, numerics::linear(tape.constant(std::move(geometry)), w_geom, no_bias));
  return mlp_rest(tape, store, prefix, cfg, h);
}

template <typename T>
Var<T> decode_queries(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                      const MlpConfig& cfg, Var<T> projected, std::size_t h, std::size_t w,
                      const std::vector<Var<T>>& extras, const QueryBatch& queries,
                      AreaRule rule) {
  queries.validate();
  if (projected.shape().empty() || projected.shape()[0] != h * w) {
    throw UsageError("decode_queries: projected latents do not match the " + std::to_string(h) + " x " +
                     std::to_string(w) + " grid");
  }
  const std::size_t q = queries.size();
  std::vector<LatentSample> samples(4 * q);
  std::vector<T> weights(4 * q);
  for (std::size_t i = 0; i < q; ++i) {
    const auto corners = ensemble_corners(queries.coords[2 * i], queries.coords[2 * i + 1], h, w, rule);
    const double cell_y = queries.cells[2 * i] * static_cast<double>(h) / 2.0;
    const double cell_x = queries.cells[2 * i + 1] * static_cast<double>(w) / 2.0;
    for (std::size_t k = 0; k < 4; ++k) {
      samples[4 * i + k] = {corners[k].position, corners[k].rel_y, corners[k].rel_x, cell_y, cell_x};
      weights[4 * i + k] = static_cast<T>(corners[k].weight);
    }
  }
  const Var<T> rows = decode_samples(tape, store, prefix, cfg, projected, extras, samples, 4);
  return numerics::blend_rows(rows, weights, 4);
}

template <typename T>
Var<T> local_ensemble_decode(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                             const MlpConfig& cfg, Var<T> fm,
                             const std::vector<Var<T>>& extras, const QueryBatch& queries,
                             AreaRule rule) {
  if (fm.shape().size() != 3 || fm.shape()[1] < 2 || fm.shape()[2] < 2) {
    throw UsageError("local ensemble needs a latent grid of at least 2 x 2, got " +
                     numerics::shape_string(fm.shape()));
  }
  std::size_t width = fm.shape()[0] + 4;
  for (const Var<T>& e : extras) width += e.shape().back();
  if (width != cfg.input) {
    throw UsageError("decoder input width " + std::to_string(width) + " does not match MLP input " +
                     std::to_string(cfg.input));
  }
  const Var<T> projected = project_latents(tape, store, prefix, cfg, fm);
  return decode_queries(tape, store, prefix, cfg, projected, fm.shape()[1], fm.shape()[2], extras,
                        queries, rule);
}

#define DDIR_INSTANTIATE_LIF(T)                                                                \
  template void init_mlp<T>(ParamStore<T>&, const std::string&, const MlpConfig&, std::uint64_t); \
  template Var<T> mlp_forward<T>(Tape<T>&, ParamStore<T>&, const std::string&, const MlpConfig&, \
                                 Var<T>);                                                      \
  template Var<T> project_latents<T>(Tape<T>&, ParamStore<T>&, const std::string&,             \
                                     const MlpConfig&, Var<T>);                                \
  template Var<T> decode_samples<T>(Tape<T>&, ParamStore<T>&, const std::string&,              \
                                    const MlpConfig&, Var<T>, const std::vector<Var<T>>&,      \
                                    const std::vector<LatentSample>&, std::size_t);            \
  template Var<T> decode_queries<T>(Tape<T>&, ParamStore<T>&, const std::string&,              \
                                    const MlpConfig&, Var<T>, std::size_t, std::size_t,        \
                                    const std::vector<Var<T>>&, const QueryBatch&, AreaRule);  \
  template Var<T> local_ensemble_decode<T>(Tape<T>&, ParamStore<T>&, const std::string&,       \
                                           const MlpConfig&, Var<T>,                           \
                                           const std::vector<Var<T>>&, const QueryBatch&,      \
                                           AreaRule);

DDIR_INSTANTIATE_LIF(float)
DDIR_INSTANTIATE_LIF(double)

#undef DDIR_INSTANTIATE_LIF

}  // namespace ddir::lif
