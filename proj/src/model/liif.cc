#include "ddir/model/liif.h"

namespace ddir::model {

lif::MlpConfig LiifConfig::mlp() const {
  return lif::MlpConfig{9 * encoder.channels + 4, hidden, layers, 3};
}

template <typename T>
void init_liif(ParamStore<T>& store, const LiifConfig& cfg, std::uint64_t seed) {
  encoder::init_encoder(store, "enc_sr", cfg.encoder, seed);
  lif::init_mlp(store, "mlp_sr", cfg.mlp(), seed);
}

template <typename T>
Var<T> liif_loss(Tape<T>& tape, ParamStore<T>& store, const LiifConfig& cfg,
                 const std::vector<TrainItem>& batch) {
  std::vector<Var<T>> preds, targets;
  for (const TrainItem& item : batch) {
    const Var<T> input = tape.constant(encoder::image_to_tensor<T>(item.lr, T(-0.5)));
    const Var<T> fm = encoder::unfold3x3(encoder::encode(tape, store, "enc_sr", cfg.encoder, input));
    preds.push_back(lif::local_ensemble_decode(tape, store, "mlp_sr", cfg.mlp(), fm, {}, item.queries,
                                               cfg.area_rule));
    Tensor<T> target(numerics::Shape{item.queries.size(), 3});
    for (std::size_t i = 0; i < item.queries.targets.size(); ++i) {
      target[i] = static_cast<T>(item.queries.targets[i]);
    }
    targets.push_back(tape.constant(std::move(target)));
  }
  return numerics::l1_loss(numerics::concat_rows(preds), numerics::concat_rows(targets));
}

template void init_liif<float>(ParamStore<float>&, const LiifConfig&, std::uint64_t);
template void init_liif<double>(ParamStore<double>&, const LiifConfig&, std::uint64_t);
template Var<float> liif_loss<float>(Tape<float>&, ParamStore<float>&, const LiifConfig&,
                                     const std::vector<TrainItem>&);
template Var<double> liif_loss<double>(Tape<double>&, ParamStore<double>&, const LiifConfig&,
                                       const std::vector<TrainItem>&);

}  // namespace ddir::model
