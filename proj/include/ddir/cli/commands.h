// The operations behind `ddir train|eval|infer|synth|gradcheck`.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ddir/cli/config.h"
#include "ddir/data/manifest.h"
#include "ddir/imaging/image.h"
#include "ddir/model/ddir.h"

namespace ddir::cli {

struct EpochLog {
  std::size_t epoch = 0;  // zero-based; the learning rate uses the same index
  double loss_sr = 0;     // means over the epoch's iterations
  double loss_def = 0;
  double loss_total = 0;
  double wall_time = 0;  // seconds
};

struct TrainResult {
  std::filesystem::path final_checkpoint;
  std::vector<EpochLog> log;
};

// Trains on data.train_manifest and writes into io.output_dir:
//   loss.csv     epoch,loss_sr,loss_def,loss_total,wall_time (wall_time is 0
//                in deterministic mode)
//   timing.csv   epoch,seconds with measured times
//   epoch_NNNN.ddir every train.save_interval epochs, and final.ddir
// Each iteration samples a batch from a seed derived from (train.seed, epoch,
// iteration). With epochs = 0 only the initial model is saved. Progress lines
// go to `progress`. Throws NumericError when a loss is not finite.
TrainResult cmd_train(const RunConfig& cfg, std::ostream& progress);

// Prediction for one LR image at the size of its HR counterpart, quantized
// to 8 bits like a written PNG. `model` is required in model mode.
imaging::Image eval_prediction(EvalMode mode, model::DdirModel<float>* model, const imaging::Image& lr,
                               const imaging::Image& hr, std::size_t chunk);

// Border width for a scale: `shave` if non-negative, else ceil(scale).
std::size_t shave_for(long shave, double scale);

struct EvalRow {
  double scale = 0;
  std::size_t count = 0;
  double psnr_y = 0;  // mean over pairs; +inf when any pair is exact
};

// Mean PSNR-Y per requested scale over data.test_manifest. Throws DataError
// listing the available scales when one is missing.
std::vector<EvalRow> cmd_eval(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint);

// "scale,count,psnr_y" header plus one row per scale, PSNR with two decimals
// and "inf" for exact reconstructions.
std::string format_eval_csv(const std::vector<EvalRow>& rows);

// Loads the checkpoint, upscales `input` by `scale` and writes `output`.
imaging::Image cmd_infer(const std::filesystem::path& checkpoint, const std::filesystem::path& input,
                         double scale, const std::filesystem::path& output,
                         std::size_t chunk = model::kDefaultChunk);

// Generates the synthetic dataset into synth.output_dir. Without
// synth.source_dir, procedural sources are written to <output>/sources first.
data::Manifest cmd_synth(const RunConfig& cfg);

struct GradcheckLine {
  std::string name;
  double max_rel_error = 0;
  std::size_t elements = 0;
  std::size_t refined = 0;
  std::string worst;  // "param[index]" of the largest error
  double analytic = 0, numeric = 0;
  bool pass = false;
};

inline constexpr double kGradcheckTolerance = 1e-5;

// Finite-difference checks in 64-bit: every differentiable op on random
// small inputs, then the full joint loss of a toy model (LR 4x4, HR 8x8,
// 10 queries) under every wiring of the model toggles. Only model.area_rule
// is taken from `cfg.model`; gradcheck.seed drives the random inputs and
// gradcheck.step is the finite-difference step. Every checked function is
// piecewise linear in each single parameter, so a step of 0.05 carries no
// truncation error away from kinks and keeps rounding noise small.
std::vector<GradcheckLine> cmd_gradcheck(const RunConfig& cfg);

}  // namespace ddir::cli
