#include "ddir/data/dataset.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ddir/common/error.h"
#include "ddir/imaging/image_io.h"
#include "ddir/lif/lif.h"

namespace ddir::data {

Dataset Dataset::load(const Manifest& manifest) {
  std::vector<Pair> pairs;
  pairs.reserve(manifest.records.size());
  for (const PairRecord& r : manifest.records) {
    pairs.push_back({r, imaging::read_image(manifest.lr_file(r)), imaging::read_image(manifest.hr_file(r))});
  }
  return Dataset(std::move(pairs));
}

std::size_t hr_patch_side(std::size_t patch, double scale) {
  return static_cast<std::size_t>(std::llround(static_cast<double>(patch) * scale));
}

void check_trainable(const Dataset& dataset, const BatchSpec& spec) {
  if (spec.batch == 0 || spec.patch == 0 || spec.queries == 0) {
    throw UsageError("batch, patch and queries must be positive");
  }
  for (const Pair& p : dataset.pairs()) {
    const std::size_t side = hr_patch_side(spec.patch, p.record.scale);
    const std::string name = "pair (" + p.record.scene + ", " + format_scale(p.record.scale) + ")";
    if (p.lr.height() < spec.patch || p.lr.width() < spec.patch) {
      throw DataError(name + ": LR is smaller than the " + std::to_string(spec.patch) + "-pixel patch");
    }
    if (p.hr.height() < side || p.hr.width() < side) {
      throw DataError(name + ": HR is smaller than the " + std::to_string(side) + "-pixel HR patch");
    }
    if (spec.queries > side * side) {
      throw UsageError(name + ": " + std::to_string(spec.queries) + " queries exceed the " +
                       std::to_string(side * side) + " pixels of an HR patch");
    }
  }
}

TrainBatch sample_batch(const Dataset& dataset, std::uint64_t seed, const BatchSpec& spec) {
  if (dataset.size() == 0) throw DataError("cannot sample from an empty dataset");
  check_trainable(dataset, spec);
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  };

  TrainBatch out;
  std::vector<std::size_t> order;
  for (std::size_t b = 0; b < spec.batch; ++b) {
    const std::size_t index = uniform(dataset.size());
    const Pair& pair = dataset.pairs()[index];
    const double s = pair.record.scale;
    const std::size_t y0 = uniform(pair.lr.height() - spec.patch + 1);
    const std::size_t x0 = uniform(pair.lr.width() - spec.patch + 1);
    const std::size_t side = hr_patch_side(spec.patch, s);
    auto hr_origin = [&](std::size_t lr_origin, std::size_t hr_extent) {
      const auto o = static_cast<std::size_t>(std::llround(s * static_cast<double>(lr_origin)));
      return std::min(o, hr_extent - side);
    };
    const std::size_t hy = hr_origin(y0, pair.hr.height()), hx = hr_origin(x0, pair.hr.width());

    model::TrainItem item;
    item.lr = pair.lr.crop(y0, x0, spec.patch, spec.patch);
    item.hr_height = side;
    item.hr_width = side;

    // Partial Fisher-Yates: the first `queries` entries are a uniform sample
    // without replacement.
    order.resize(side * side);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < spec.queries; ++i) {
      std::swap(order[i], order[i + uniform(order.size() - i)]);
    }
    lif::QueryBatch& q = item.queries;
    q.coords.reserve(2 * spec.queries);
    q.cells.reserve(2 * spec.queries);
    q.targets.reserve(3 * spec.queries);
    const double n = static_cast<double>(side);
    for (std::size_t i = 0; i < spec.queries; ++i) {
      const std::size_t py = order[i] / side, px = order[i] % side;
      q.coords.push_back(-1.0 + (2.0 * static_cast<double>(py) + 1.0) / n);
      q.coords.push_back(-1.0 + (2.0 * static_cast<double>(px) + 1.0) / n);
      q.cells.push_back(2.0 / n);
      q.cells.push_back(2.0 / n);
      for (std::size_t c = 0; c < 3; ++c) q.targets.push_back(pair.hr.at(hy + py, hx + px, c));
    }
    out.items.push_back(std::move(item));
    out.scales.push_back(s);
    out.pair_index.push_back(index);
  }
  return out;
}

}  // namespace ddir::data
