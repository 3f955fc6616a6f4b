#include "ddir/cli/commands.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "ddir/cli/checkpoint.h"
#include "ddir/common/error.h"
#include "ddir/data/dataset.h"
#include "ddir/data/synth.h"
#include "ddir/imaging/image_io.h"
#include "ddir/imaging/metrics.h"
#include "ddir/imaging/resample.h"
#include "ddir/numerics/adam.h"
#include "ddir/numerics/init.h"

namespace ddir::cli {
namespace fs = std::filesystem;

namespace {

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::uint64_t batch_seed(std::uint64_t seed, std::size_t epoch, std::size_t iteration) {
  return numerics::fnv1a("batch/" + std::to_string(seed) + "/" + std::to_string(epoch) + "/" +
                         std::to_string(iteration));
}

const fs::path& require_path(const fs::path& p, const char* key) {
  if (p.empty()) throw UsageError(std::string(key) + " is not set");
  return p;
}

}  // namespace

TrainResult cmd_train(const RunConfig& cfg, std::ostream& progress) {
  const data::Manifest manifest =
      data::load_manifest(require_path(cfg.train_manifest, "data.train_manifest"), data::Split::kTrain, cfg.patch);
  if (manifest.records.empty()) throw DataError("training manifest " + cfg.train_manifest.string() + " is empty");
  const data::Dataset dataset = data::Dataset::load(manifest);
  const data::BatchSpec spec{cfg.batch, cfg.patch, cfg.queries};
  data::check_trainable(dataset, spec);

  make_dir(cfg.output_dir);
  model::DdirModel<float> model(cfg.model, cfg.seed);
  const std::string echo = echo_config(cfg, false);
  const std::size_t iterations =
      cfg.iters_per_epoch > 0 ? cfg.iters_per_epoch : (dataset.size() + cfg.batch - 1) / cfg.batch;

  std::ofstream log(cfg.output_dir / "loss.csv");
  std::ofstream timing(cfg.output_dir / "timing.csv");
  if (!log || !timing) throw DataError("cannot write logs in " + cfg.output_dir.string());
  log << "epoch,loss_sr,loss_def,loss_total,wall_time\n";
  timing << "epoch,seconds\n";

  TrainResult result;
  using Clock = std::chrono::steady_clock;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = Clock::now();
    const numerics::AdamConfig adam{learning_rate(cfg, epoch), cfg.beta1, cfg.beta2, cfg.eps};
    EpochLog row;
    row.epoch = epoch;
    for (std::size_t it = 0; it < iterations; ++it) {
      const data::TrainBatch batch = data::sample_batch(dataset, batch_seed(cfg.seed, epoch, it), spec);
      numerics::Tape<float> tape;
      const model::TrainStepOutput<float> out = model::forward_train(tape, model, batch.items);
      const double total = out.loss_total.value().item();
      if (!std::isfinite(total)) {
        throw NumericError("loss is not finite at epoch " + std::to_string(epoch) + ", iteration " +
                           std::to_string(it));
      }
      tape.backward(out.loss_total);
      numerics::adam_step(model.params(), adam);
      row.loss_sr += out.loss_sr.value().item();
      row.loss_def += out.loss_def.value().item();
      row.loss_total += total;
    }
    const double n = static_cast<double>(iterations);
    row.loss_sr /= n;
    row.loss_def /= n;
    row.loss_total /= n;
    row.wall_time = std::chrono::duration<double>(Clock::now() - start).count();

    log << epoch << "," << fmt_g(row.loss_sr) << "," << fmt_g(row.loss_def) << "," << fmt_g(row.loss_total) << ","
        << (cfg.deterministic ? "0" : fmt_g(row.wall_time)) << "\n";
    timing << epoch << "," << fmt_g(row.wall_time) << "\n";
    log.flush();
    progress << "epoch " << epoch << " loss_total " << fmt_g(row.loss_total) << " lr " << fmt_g(adam.lr) << "\n";
    result.log.push_back(row);

    if (cfg.save_interval > 0 && (epoch + 1) % cfg.save_interval == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%04zu.ddir", epoch + 1);
      save_checkpoint(cfg.output_dir / name, echo, model.params());
    }
  }
  result.final_checkpoint = cfg.output_dir / "final.ddir";
  save_checkpoint(result.final_checkpoint, echo, model.params());
  if (!log || !timing) throw DataError("cannot write logs in " + cfg.output_dir.string());
  return result;
}

imaging::Image eval_prediction(EvalMode mode, model::DdirModel<float>* model, const imaging::Image& lr,
                               const imaging::Image& hr, std::size_t chunk) {
  imaging::Image pred;
  switch (mode) {
    case EvalMode::kIdentity:
      pred = hr;
      break;
    case EvalMode::kBicubic:
      pred = imaging::bicubic_resize(lr, {hr.height(), hr.width()});
      break;
    case EvalMode::kModel:
      if (model == nullptr) throw UsageError("eval.mode = model needs --checkpoint");
      pred = model::infer_full(*model, lr, hr.height(), hr.width(), chunk);
      break;
  }
  for (float& v : pred.samples()) v = static_cast<float>(imaging::quantize(v) / 255.0);
  return pred;
}

std::size_t shave_for(long shave, double scale) {
  return shave >= 0 ? static_cast<std::size_t>(shave) : static_cast<std::size_t>(std::ceil(scale));
}

std::vector<EvalRow> cmd_eval(const RunConfig& cfg, const std::optional<fs::path>& checkpoint) {
  const data::Manifest manifest = data::load_manifest(require_path(cfg.test_manifest, "data.test_manifest"));
  const std::vector<double> available = manifest.scales();
  std::vector<double> scales = cfg.eval_scales.empty() ? available : cfg.eval_scales;
  for (double s : scales) {
    bool found = false;
    for (double a : available) found = found || a == s;
    if (!found) {
      std::string list;
      for (double a : available) list += (list.empty() ? "" : ", ") + data::format_scale(a);
      throw DataError("scale " + data::format_scale(s) + " is not in " + cfg.test_manifest.string() +
                      " (available: " + (list.empty() ? "none" : list) + ")");
    }
  }
  std::optional<model::DdirModel<float>> model;
  if (cfg.eval_mode == EvalMode::kModel) {
    if (!checkpoint) throw UsageError("eval.mode = model needs --checkpoint");
    model.emplace(load_model(*checkpoint));
  }

  std::vector<EvalRow> rows;
  for (double s : scales) {
    EvalRow row{s, 0, 0};
    for (const data::PairRecord& r : manifest.records) {
      if (r.scale != s) continue;
      const imaging::Image lr = imaging::read_image(manifest.lr_file(r));
      const imaging::Image hr = imaging::read_image(manifest.hr_file(r));
      const imaging::Image pred = eval_prediction(cfg.eval_mode, model ? &*model : nullptr, lr, hr, cfg.chunk);
      row.psnr_y += imaging::psnr_y(pred, hr, shave_for(cfg.shave, s));
      ++row.count;
    }
    row.psnr_y /= static_cast<double>(row.count);
    rows.push_back(row);
  }
  return rows;
}

std::string format_eval_csv(const std::vector<EvalRow>& rows) {
  std::string out = "scale,count,psnr_y\n";
  for (const EvalRow& r : rows) {
    char psnr[32];
    if (std::isinf(r.psnr_y)) std::snprintf(psnr, sizeof psnr, "inf");
    else std::snprintf(psnr, sizeof psnr, "%.2f", r.psnr_y);
    out += data::format_scale(r.scale) + "," + std::to_string(r.count) + "," + psnr + "\n";
  }
  return out;
}

imaging::Image cmd_infer(const fs::path& checkpoint, const fs::path& input, double scale, const fs::path& output,
                         std::size_t chunk) {
  if (!(scale > 0)) throw UsageError("--scale must be positive");
  model::DdirModel<float> model = load_model(checkpoint);
  const imaging::Image out = model::infer_full(model, imaging::read_image(input), scale, chunk);
  imaging::write_image(out, output);
  return out;
}

data::Manifest cmd_synth(const RunConfig& cfg) {
  fs::path source = cfg.synth_source;
  if (source.empty()) {
    source = cfg.synth_output / "sources";
    data::write_procedural_sources(source, cfg.synth_kind, cfg.synth_count, cfg.synth_height, cfg.synth_width,
                                   cfg.synth.seed, cfg.synth_period);
  }
  return data::synth_generate(source, cfg.synth, cfg.synth_scales, cfg.synth_output);
}

}  // namespace ddir::cli
