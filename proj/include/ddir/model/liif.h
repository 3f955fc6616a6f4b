// Standalone single-branch local implicit image function: one encoder, 3x3
// unfolding and a local-ensemble decoder with no extra features. It uses the
// SR-branch parameter names, so a DDIR model with both toggles off and the
// same seed starts from identical weights.
#pragma once

#include <cstdint>
#include <vector>

#include "ddir/model/ddir.h"

namespace ddir::model {

struct LiifConfig {
  encoder::EncoderConfig encoder;
  std::size_t hidden = 64;
  std::size_t layers = 5;
  lif::AreaRule area_rule = lif::AreaRule::kDiagonal;

  lif::MlpConfig mlp() const;
};

template <typename T>
void init_liif(ParamStore<T>& store, const LiifConfig& cfg, std::uint64_t seed);

// Mean L1 loss of the decoded queries against their targets over the batch.
template <typename T>
Var<T> liif_loss(Tape<T>& tape, ParamStore<T>& store, const LiifConfig& cfg,
                 const std::vector<TrainItem>& batch);

}  // namespace ddir::model
