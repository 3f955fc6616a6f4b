// Dual-branch deformable implicit representation.
//
// Two independent encoder/decoder pairs share the LR input:
//   deformation branch  enc_def -> unfold -> decoder mlp_def(extra: l_a)
//   SR branch           enc_sr  -> unfold -> decoder mlp_sr(extra: def_pred)
// where l_a is the spatial mean of enc_sr's (pre-unfold) features. The
// deformation branch is supervised with GT minus the bicubic-upscaled LR.
//
// Toggles select the ablation rows:
//   deformation  appearance  wiring
//   off          off         plain LIIF (SR branch only)
//   on           off         def_pred -> SR decoder
//   off          on          l_a -> SR decoder
//   on           on          l_a -> deformation decoder, def_pred -> SR decoder
// embedding_into_sr additionally feeds l_a to the SR decoder in the last row.
//
// Decoder extras are ordered [l_a, def_pred] when both are present.
#pragma once

#include <cstdint>
#include <vector>

#include "ddir/encoder/encoder.h"
#include "ddir/imaging/image.h"
#include "ddir/lif/lif.h"

namespace ddir::model {

using numerics::ParamStore;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

struct DdirConfig {
  encoder::EncoderConfig enc_sr;
  encoder::EncoderConfig enc_def;
  std::size_t hidden_sr = 64;
  std::size_t hidden_def = 64;
  std::size_t layers = 5;
  bool use_deformation_field = true;
  bool use_appearance_embedding = true;
  bool embedding_into_sr = false;
  bool stop_deformation_gradient = false;
  lif::AreaRule area_rule = lif::AreaRule::kDiagonal;

  // Throws UsageError on flag combinations with no defined wiring.
  void validate() const;

  bool embedding_feeds_sr() const {
    return use_appearance_embedding && (!use_deformation_field || embedding_into_sr);
  }
  lif::MlpConfig mlp_sr() const;
  lif::MlpConfig mlp_def() const;
};

// One training sample: an LR patch, the size of its HR counterpart, and query
// pixels of that HR patch with their GT colours as targets.
struct TrainItem {
  imaging::Image lr;
  std::size_t hr_height = 0;
  std::size_t hr_width = 0;
  lif::QueryBatch queries;
};

template <typename T>
class DdirModel {
 public:
  // Fresh parameters from `seed`.
  DdirModel(const DdirConfig& cfg, std::uint64_t seed);
  // Existing parameters; throws UsageError if the set or a shape differs from
  // what `cfg` needs.
  DdirModel(const DdirConfig& cfg, ParamStore<T> params);

  const DdirConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  template <typename U>
  DdirModel<U> cast() const {
    return DdirModel<U>(cfg_, params_.template cast<U>());
  }

 private:
  DdirConfig cfg_;
  ParamStore<T> params_;
};

template <typename T>
struct TrainStepOutput {
  Var<T> sr_pred;   // (B * Q) x 3
  Var<T> def_pred;  // (B * Q) x 3, invalid when the deformation field is off
  Var<T> loss_sr;
  Var<T> loss_def;  // constant 0 when the deformation field is off
  Var<T> loss_total;
};

// Spatial mean of an SR-branch feature map, C x h x w -> C.
template <typename T>
Var<T> appearance_embedding(Var<T> fm_sr);

// GT minus the bicubic upscale of `lr` to hr_height x hr_width, at each
// query. Queries must sit on HR pixel centers; `gt` holds 3 values per query.
Tensor<float> deformation_target(const std::vector<float>& gt, const imaging::Image& lr,
                                 const lif::QueryBatch& queries, std::size_t hr_height,
                                 std::size_t hr_width);

// Unweighted sum of the two losses.
template <typename T>
Var<T> total_loss(Var<T> loss_sr, Var<T> loss_def);

// Records the training forward pass for a batch. Losses are means over every
// query of every item.
template <typename T>
TrainStepOutput<T> forward_train(Tape<T>& tape, DdirModel<T>& model,
                                 const std::vector<TrainItem>& batch);

// Same, reading parameters from `params`, which must follow the layout of
// DdirModel for `cfg`.
template <typename T>
TrainStepOutput<T> forward_train(Tape<T>& tape, const DdirConfig& cfg, ParamStore<T>& params,
                                 const std::vector<TrainItem>& batch);

// Raw decoder outputs for every pixel of an out_height x out_width raster,
// row-major, 3 values per pixel.
struct Prediction {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> sr;
  std::vector<float> deformation;  // empty when the deformation field is off
};

inline constexpr std::size_t kDefaultChunk = 65536;

// Inference without GT or bicubic reference; queries are decoded `chunk` at a
// time and the result does not depend on the chunk size.
Prediction predict(DdirModel<float>& model, const imaging::Image& lr, std::size_t out_height,
                   std::size_t out_width, std::size_t chunk = kDefaultChunk);

// Output size for an upscaling factor: round(scale * extent) per axis.
// Throws UsageError for non-positive scales.
struct OutputDims {
  std::size_t height;
  std::size_t width;
};
OutputDims output_dims(std::size_t height, std::size_t width, double scale);

// Clamped super-resolved image at round(scale * dims).
imaging::Image infer_full(DdirModel<float>& model, const imaging::Image& lr, double scale,
                          std::size_t chunk = kDefaultChunk);
imaging::Image infer_full(DdirModel<float>& model, const imaging::Image& lr,
                          std::size_t out_height, std::size_t out_width,
                          std::size_t chunk = kDefaultChunk);

// Encoder input for an image: planar, samples shifted by -0.5.
template <typename T>
Tensor<T> encoder_input(const imaging::Image& img);

}  // namespace ddir::model
