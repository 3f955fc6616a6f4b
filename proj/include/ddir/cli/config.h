// Run configuration: a flat `key = value` text file.
//
// Lines are `section.key = value`; `#` starts a comment and blank lines are
// ignored. Unknown keys and malformed values are UsageErrors carrying the
// line number. Relative paths are resolved against the directory of the
// config file. Lists are comma separated.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ddir/data/synth.h"
#include "ddir/model/ddir.h"

namespace ddir::cli {

enum class EvalMode { kModel, kBicubic, kIdentity };

struct RunConfig {
  model::DdirConfig model;

  // optim.*
  double lr = 2e-4;
  double lr_decay = 0.5;
  std::size_t decay_every = 200;  // epochs
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  // train.*
  std::size_t batch = 16;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  std::size_t queries = 2304;
  std::size_t patch = 48;
  std::size_t iters_per_epoch = 0;  // 0: ceil(pairs / batch)
  std::size_t save_interval = 0;    // epochs between checkpoints; 0: final only
  bool deterministic = true;        // wall_time column written as 0

  // data.*
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;

  // eval.*
  std::vector<double> eval_scales;  // empty: every scale in the manifest
  long shave = -1;                  // negative: ceil(scale)
  EvalMode eval_mode = EvalMode::kModel;
  std::size_t chunk = model::kDefaultChunk;

  // io.*
  std::filesystem::path output_dir = "runs/ddir";

  // synth.*
  std::filesystem::path synth_source;  // empty: procedural sources
  data::SourceKind synth_kind = data::SourceKind::kSmooth;
  std::size_t synth_count = 10;
  std::size_t synth_height = 64;
  std::size_t synth_width = 64;
  double synth_period = 10;
  std::vector<double> synth_scales{1.5, 2.0};
  data::SyntheticConfig synth;
  std::filesystem::path synth_output = "data/synth";

  // gradcheck.*
  double gradcheck_step = 5e-2;
  std::uint64_t gradcheck_seed = 0;
};

// Parses config text. `base` resolves relative paths; `origin` names the
// source in error messages.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base,
                       const std::string& origin = "config");

// Reads and parses a config file. Missing files are DataErrors.
RunConfig load_config(const std::filesystem::path& path);

// Every key with its current value, one `key = value` line each, in a fixed
// order. io.* keys are left out when `include_io` is false so that a run's
// checkpoints do not depend on where they were written.
std::string echo_config(const RunConfig& cfg, bool include_io = true);

// All recognised keys in echo order.
std::vector<std::string> config_keys();

// Learning rate for an epoch: lr * lr_decay^floor(epoch / decay_every).
double learning_rate(const RunConfig& cfg, std::size_t epoch);

}  // namespace ddir::cli
