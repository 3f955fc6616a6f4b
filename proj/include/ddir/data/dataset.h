// In-memory pairs and training-batch sampling.
#pragma once

#include <cstdint>
#include <vector>

#include "ddir/data/manifest.h"
#include "ddir/imaging/image.h"
#include "ddir/model/ddir.h"

namespace ddir::data {

struct Pair {
  PairRecord record;
  imaging::Image lr;
  imaging::Image hr;
};

class Dataset {
 public:
  // Reads every image of the manifest.
  static Dataset load(const Manifest& manifest);
  explicit Dataset(std::vector<Pair> pairs) : pairs_(std::move(pairs)) {}

  const std::vector<Pair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }

 private:
  std::vector<Pair> pairs_;
};

struct BatchSpec {
  std::size_t batch = 16;
  std::size_t patch = 48;     // LR patch side
  std::size_t queries = 2304;  // HR pixels per item
};

struct TrainBatch {
  std::vector<model::TrainItem> items;
  std::vector<double> scales;
  std::vector<std::size_t> pair_index;
};

// HR patch side for an LR patch side: round(patch * scale).
std::size_t hr_patch_side(std::size_t patch, double scale);

// Throws DataError naming the first pair too small for `spec`: LR below
// patch x patch, or HR below the HR patch side.
void check_trainable(const Dataset& dataset, const BatchSpec& spec);

// Each item: a uniformly chosen pair, a uniformly placed LR window of
// patch x patch, the HR window of round(patch * scale) at origin
// round(scale * LR origin) (moved back inside the image when it would
// overflow), and `queries` distinct HR patch pixels chosen uniformly with
// their colours as targets. Coordinates follow the coord_grid convention of
// the HR patch with cells (2 / side, 2 / side). The result depends only on
// (dataset, seed, spec).
TrainBatch sample_batch(const Dataset& dataset, std::uint64_t seed, const BatchSpec& spec);

}  // namespace ddir::data
