#include "ddir/model/ddir.h"

#include <algorithm>
#include <cmath>

#include "ddir/imaging/resample.h"

namespace ddir::model {

namespace {

constexpr const char* kEncSr = "enc_sr";
constexpr const char* kEncDef = "enc_def";
constexpr const char* kMlpSr = "mlp_sr";
constexpr const char* kMlpDef = "mlp_def";

// Parameters a configuration needs, initialized from `seed`.
template <typename T>
ParamStore<T> layout(const DdirConfig& cfg, std::uint64_t seed) {
  ParamStore<T> store;
  encoder::init_encoder(store, kEncSr, cfg.enc_sr, seed);
  lif::init_mlp(store, kMlpSr, cfg.mlp_sr(), seed);
  if (cfg.use_deformation_field) {
    encoder::init_encoder(store, kEncDef, cfg.enc_def, seed);
    lif::init_mlp(store, kMlpDef, cfg.mlp_def(), seed);
  }
  return store;
}

template <typename T>
Tensor<T> query_targets(const lif::QueryBatch& q) {
  Tensor<T> out(numerics::Shape{q.size(), 3});
  for (std::size_t i = 0; i < q.targets.size(); ++i) out[i] = static_cast<T>(q.targets[i]);
  return out;
}

// Encoded, unfolded maps and the embedding of one LR input.
template <typename T>
struct Encoded {
  Var<T> sr_unfolded;
  Var<T> def_unfolded;
  Var<T> embedding;
};

template <typename T>
Encoded<T> encode_branches(Tape<T>& tape, const DdirConfig& cfg, ParamStore<T>& params,
                           const imaging::Image& lr) {
  Encoded<T> out;
  const Var<T> input = tape.constant(encoder_input<T>(lr));
  const Var<T> fm_sr = encoder::encode(tape, params, kEncSr, cfg.enc_sr, input);
  out.sr_unfolded = encoder::unfold3x3(fm_sr);
  if (cfg.use_appearance_embedding) out.embedding = appearance_embedding(fm_sr);
  if (cfg.use_deformation_field) {
    const Var<T> fm_def = encoder::encode(tape, params, kEncDef, cfg.enc_def, input);
    out.def_unfolded = encoder::unfold3x3(fm_def);
  }
  return out;
}

template <typename T>
std::vector<Var<T>> def_extras(const DdirConfig& cfg, const Encoded<T>& e) {
  if (cfg.use_appearance_embedding) return {e.embedding};
  return {};
}

template <typename T>
std::vector<Var<T>> sr_extras(const DdirConfig& cfg, Var<T> embedding, Var<T> def_pred) {
  std::vector<Var<T>> extras;
  if (cfg.embedding_feeds_sr()) extras.push_back(embedding);
  if (cfg.use_deformation_field) {
    extras.push_back(cfg.stop_deformation_gradient ? numerics::detach(def_pred) : def_pred);
  }
  return extras;
}

}  // namespace

void DdirConfig::validate() const {
  enc_sr.validate();
  if (use_deformation_field) enc_def.validate();
  if (hidden_sr == 0 || hidden_def == 0) throw UsageError("decoder hidden width must be >= 1");
  if (layers < 2) throw UsageError("decoders need at least 2 layers");
  if (embedding_into_sr && !(use_appearance_embedding && use_deformation_field)) {
    throw UsageError("embedding_into_sr needs both the appearance embedding and the deformation field");
  }
  if (stop_deformation_gradient && !use_deformation_field) {
    throw UsageError("stop_deformation_gradient needs the deformation field");
  }
}

lif::MlpConfig DdirConfig::mlp_sr() const {
  std::size_t input = 9 * enc_sr.channels + 4;
  if (embedding_feeds_sr()) input += enc_sr.channels;
  if (use_deformation_field) input += 3;
  return lif::MlpConfig{input, hidden_sr, layers, 3};
}

lif::MlpConfig DdirConfig::mlp_def() const {
  std::size_t input = 9 * enc_def.channels + 4;
  if (use_appearance_embedding) input += enc_sr.channels;
  return lif::MlpConfig{input, hidden_def, layers, 3};
}

template <typename T>
DdirModel<T>::DdirModel(const DdirConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  params_ = layout<T>(cfg_, seed);
}

template <typename T>
DdirModel<T>::DdirModel(const DdirConfig& cfg, ParamStore<T> params)
    : cfg_(cfg), params_(std::move(params)) {
  cfg_.validate();
  const ParamStore<T> probe = layout<T>(cfg_, 0);
  if (probe.names() != params_.names()) {
    throw UsageError("parameter set does not match the model configuration");
  }
  for (const std::string& name : probe.names()) {
    if (probe.value(name).shape() != params_.value(name).shape()) {
      throw UsageError("parameter '" + name + "' has shape " +
                       numerics::shape_string(params_.value(name).shape()) + ", configuration expects " +
                       numerics::shape_string(probe.value(name).shape()));
    }
  }
}

template <typename T>
Var<T> appearance_embedding(Var<T> fm_sr) {
  return numerics::global_average_pool(fm_sr);
}

Tensor<float> deformation_target(const std::vector<float>& gt, const imaging::Image& lr,
                                 const lif::QueryBatch& queries, std::size_t hr_height,
                                 std::size_t hr_width) {
  const std::size_t q = queries.size();
  if (gt.size() != 3 * q) throw UsageError("deformation_target: need 3 GT values per query");
  const imaging::Image up = imaging::bicubic_resize(lr, {hr_height, hr_width});
  Tensor<float> out(numerics::Shape{q, 3});
  auto pixel = [](double coord, std::size_t n) {
    const double u = ((coord + 1.0) * static_cast<double>(n) - 1.0) / 2.0;
    const double r = std::round(u);
    if (std::abs(u - r) > 1e-6 || r < 0 || r >= static_cast<double>(n)) {
      throw UsageError("deformation_target: query " + std::to_string(coord) +
                       " is not on the HR pixel grid");
    }
    return static_cast<std::size_t>(r);
  };
  for (std::size_t i = 0; i < q; ++i) {
    const std::size_t y = pixel(queries.coords[2 * i], hr_height);
    const std::size_t x = pixel(queries.coords[2 * i + 1], hr_width);
    for (std::size_t c = 0; c < 3; ++c) out(i, c) = gt[3 * i + c] - up.at(y, x, c);
  }
  return out;
}

template <typename T>
Var<T> total_loss(Var<T> loss_sr, Var<T> loss_def) {
  return numerics::add(loss_sr, loss_def);
}

template <typename T>
TrainStepOutput<T> forward_train(Tape<T>& tape, DdirModel<T>& model,
                                 const std::vector<TrainItem>& batch) {
  return forward_train(tape, model.config(), model.params(), batch);
}

template <typename T>
TrainStepOutput<T> forward_train(Tape<T>& tape, const DdirConfig& cfg, ParamStore<T>& params,
                                 const std::vector<TrainItem>& batch) {
  if (batch.empty()) throw UsageError("forward_train: empty batch");
  const lif::MlpConfig mlp_sr = cfg.mlp_sr(), mlp_def = cfg.mlp_def();
  std::vector<Var<T>> sr_preds, def_preds, sr_targets, def_targets;
  for (const TrainItem& item : batch) {
    if (!item.queries.has_targets()) throw UsageError("forward_train: queries carry no targets");
    const Encoded<T> enc = encode_branches(tape, cfg, params, item.lr);
    Var<T> def_pred;
    if (cfg.use_deformation_field) {
      def_pred = lif::local_ensemble_decode(tape, params, kMlpDef, mlp_def, enc.def_unfolded,
                                            def_extras(cfg, enc), item.queries, cfg.area_rule);
      def_preds.push_back(def_pred);
      def_targets.push_back(tape.constant(
          deformation_target(item.queries.targets, item.lr, item.queries, item.hr_height, item.hr_width)
              .template cast<T>()));
    }
    sr_preds.push_back(lif::local_ensemble_decode(tape, params, kMlpSr, mlp_sr, enc.sr_unfolded,
                                                  sr_extras(cfg, enc.embedding, def_pred), item.queries,
                                                  cfg.area_rule));
    sr_targets.push_back(tape.constant(query_targets<T>(item.queries)));
  }
  TrainStepOutput<T> out;
  out.sr_pred = numerics::concat_rows(sr_preds);
  out.loss_sr = numerics::l1_loss(out.sr_pred, numerics::concat_rows(sr_targets));
  if (cfg.use_deformation_field) {
    out.def_pred = numerics::concat_rows(def_preds);
    out.loss_def = numerics::l1_loss(out.def_pred, numerics::concat_rows(def_targets));
  } else {
    out.loss_def = tape.constant(Tensor<T>::scalar(T(0)));
  }
  out.loss_total = total_loss(out.loss_sr, out.loss_def);
  return out;
}

Prediction predict(DdirModel<float>& model, const imaging::Image& lr, std::size_t out_height,
                   std::size_t out_width, std::size_t chunk) {
  if (chunk == 0) throw UsageError("inference chunk size must be positive");
  if (out_height == 0 || out_width == 0) throw UsageError("output extents must be positive");
  const DdirConfig& cfg = model.config();
  const lif::MlpConfig mlp_sr = cfg.mlp_sr(), mlp_def = cfg.mlp_def();
  const std::size_t h = lr.height(), w = lr.width();

  // Per-image work: encoders, embedding and first-layer projections.
  Tape<float> shared;
  shared.set_grad_enabled(false);
  const Encoded<float> enc = encode_branches(shared, cfg, model.params(), lr);
  const Tensor<float> proj_sr = lif::project_latents(shared, model.params(), kMlpSr, mlp_sr, enc.sr_unfolded).value();
  Tensor<float> proj_def, embedding;
  if (cfg.use_deformation_field) {
    proj_def = lif::project_latents(shared, model.params(), kMlpDef, mlp_def, enc.def_unfolded).value();
  }
  if (cfg.use_appearance_embedding) embedding = enc.embedding.value();

  const lif::QueryBatch all = lif::grid_queries(out_height, out_width);
  Prediction out;
  out.height = out_height;
  out.width = out_width;
  out.sr.reserve(3 * all.size());
  if (cfg.use_deformation_field) out.deformation.reserve(3 * all.size());
  for (std::size_t begin = 0; begin < all.size(); begin += chunk) {
    const lif::QueryBatch q = all.slice(begin, std::min(all.size(), begin + chunk));
    Tape<float> tape;
    tape.set_grad_enabled(false);
    Encoded<float> local;
    if (cfg.use_appearance_embedding) local.embedding = tape.constant(embedding);
    Var<float> def_pred;
    if (cfg.use_deformation_field) {
      def_pred = lif::decode_queries(tape, model.params(), kMlpDef, mlp_def, tape.constant(proj_def), h, w,
                                     def_extras(cfg, local), q, cfg.area_rule);
      const auto d = def_pred.value().data();
      out.deformation.insert(out.deformation.end(), d.begin(), d.end());
    }
    const Var<float> sr = lif::decode_queries(tape, model.params(), kMlpSr, mlp_sr, tape.constant(proj_sr), h, w,
                                              sr_extras(cfg, local.embedding, def_pred), q, cfg.area_rule);
    const auto s = sr.value().data();
    out.sr.insert(out.sr.end(), s.begin(), s.end());
  }
  return out;
}

OutputDims output_dims(std::size_t height, std::size_t width, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw UsageError("scale must be a positive number, got " + std::to_string(scale));
  }
  const auto dim = [scale](std::size_t n) {
    return static_cast<std::size_t>(std::llround(scale * static_cast<double>(n)));
  };
  const OutputDims d{dim(height), dim(width)};
  if (d.height == 0 || d.width == 0) throw UsageError("scale " + std::to_string(scale) + " gives an empty output");
  return d;
}

imaging::Image infer_full(DdirModel<float>& model, const imaging::Image& lr, double scale,
                          std::size_t chunk) {
  const OutputDims d = output_dims(lr.height(), lr.width(), scale);
  return infer_full(model, lr, d.height, d.width, chunk);
}

imaging::Image infer_full(DdirModel<float>& model, const imaging::Image& lr,
                          std::size_t out_height, std::size_t out_width, std::size_t chunk) {
  const Prediction p = predict(model, lr, out_height, out_width, chunk);
  imaging::Image img(out_height, out_width);
  std::copy(p.sr.begin(), p.sr.end(), img.samples().begin());
  img.clamp();
  return img;
}

template <typename T>
Tensor<T> encoder_input(const imaging::Image& img) {
  return encoder::image_to_tensor<T>(img, T(-0.5));
}

#define DDIR_INSTANTIATE_MODEL(T)                                                            \
  template class DdirModel<T>;                                                               \
  template Var<T> appearance_embedding<T>(Var<T>);                                           \
  template Var<T> total_loss<T>(Var<T>, Var<T>);                                             \
  template TrainStepOutput<T> forward_train<T>(Tape<T>&, DdirModel<T>&,                      \
                                               const std::vector<TrainItem>&);               \
  template TrainStepOutput<T> forward_train<T>(Tape<T>&, const DdirConfig&, ParamStore<T>&,  \
                                               const std::vector<TrainItem>&);               \
  template Tensor<T> encoder_input<T>(const imaging::Image&);

DDIR_INSTANTIATE_MODEL(float)
DDIR_INSTANTIATE_MODEL(double)

#undef DDIR_INSTANTIATE_MODEL

}  // namespace ddir::model
