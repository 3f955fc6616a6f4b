// Local implicit image function: query coordinates, the decoding MLP and the
// four-corner local ensemble.
//
// Coordinates are normalized to [-1, 1] in (y, x) order with pixel centers at
// -1 + (2i + 1) / n. A feature map of h x w latent codes places code (i, j) at
// the center of pixel (i, j) of an h x w raster covering the same domain.
//
// The decoder input of a (query, corner) pair is
//   [ latent code (D_fm) | extra features ... | rel_y, rel_x | cell_y, cell_x ]
// where rel is the query minus the corner's center and cell is the output
// pixel size, both in units of the latent pitch (2/h vertically, 2/w
// horizontally).
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ddir/numerics/ops.h"

namespace ddir::lif {

using numerics::ParamStore;
using numerics::Tape;
using numerics::Tensor;
using numerics::Var;

struct QueryBatch {
  std::vector<double> coords;  // Q x 2, (y, x)
  std::vector<double> cells;   // Q x 2, (2 / H_out, 2 / W_out)
  std::vector<float> targets;  // Q x 3 RGB, or empty

  std::size_t size() const { return coords.size() / 2; }
  bool has_targets() const { return !targets.empty(); }

  // Throws UsageError on inconsistent sizes, coords outside [-1, 1] or
  // non-positive cells.
  void validate() const;

  // Queries [begin, end) as a new batch.
  QueryBatch slice(std::size_t begin, std::size_t end) const;
};

// Pixel centers of an h x w raster, row-major, (y, x) pairs.
std::vector<double> coord_grid(std::size_t h, std::size_t w);

// Every pixel of an h x w output with cells (2/h, 2/w) and no targets.
QueryBatch grid_queries(std::size_t h, std::size_t w);

struct MlpConfig {
  std::size_t input = 0;
  std::size_t hidden = 64;
  std::size_t layers = 5;
  std::size_t output = 3;

  void validate() const;
};

// Parameters "<prefix>.fc<l>.w" (out x in) and "<prefix>.fc<l>.b".
template <typename T>
void init_mlp(ParamStore<T>& store, const std::string& prefix, const MlpConfig& cfg,
              std::uint64_t seed);

// `layers` affine maps with ReLU between them and none after the last.
template <typename T>
Var<T> mlp_forward(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                   const MlpConfig& cfg, Var<T> input);

// Which rectangle's area weights a corner.
enum class AreaRule {
  kDiagonal,    // area opposite the corner: the nearest code weighs most
  kSameCorner,  // area between the query and the corner itself
};

struct Corner {
  std::size_t position;  // flat latent index i * w + j
  double weight;
  double rel_y, rel_x;   // query minus corner center, latent pitch units
};

// The four latent codes around a query, ordered (i0, j0), (i0, j0 + 1),
// (i0 + 1, j0), (i0 + 1, j0 + 1). Queries beyond the outermost centers use
// the nearest corner set with weights from the clamped position; relative
// coordinates always use the true position. Positions within 1e-9 pitch of a
// center snap onto it. Requires h, w >= 2.
std::array<Corner, 4> ensemble_corners(double qy, double qx, std::size_t h, std::size_t w,
                                       AreaRule rule = AreaRule::kDiagonal);

// First-layer contribution of every latent code: fm is D_fm x h x w, the
// result is (h * w) x hidden and already includes the first-layer bias.
template <typename T>
Var<T> project_latents(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                       const MlpConfig& cfg, Var<T> fm);

struct LatentSample {
  std::size_t position;
  double rel_y, rel_x;
  double cell_y, cell_x;  // latent pitch units
};

// Decoder output for explicit samples, one row each, with no blending.
// `projected` comes from project_latents. Each extra is either a vector
// (shared by every sample) or a matrix with samples.size() / group rows,
// row r feeding samples [r * group, (r + 1) * group).
template <typename T>
Var<T> decode_samples(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                      const MlpConfig& cfg, Var<T> projected,
                      const std::vector<Var<T>>& extras,
                      const std::vector<LatentSample>& samples, std::size_t group);

// Q x output ensemble decode from a projected map of h x w codes. Per-query
// extras have Q rows.
template <typename T>
Var<T> decode_queries(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                      const MlpConfig& cfg, Var<T> projected, std::size_t h, std::size_t w,
                      const std::vector<Var<T>>& extras, const QueryBatch& queries,
                      AreaRule rule = AreaRule::kDiagonal);

// project_latents followed by decode_queries. Throws UsageError for maps
// smaller than 2 x 2.
template <typename T>
Var<T> local_ensemble_decode(Tape<T>& tape, ParamStore<T>& store, const std::string& prefix,
                             const MlpConfig& cfg, Var<T> fm,
                             const std::vector<Var<T>>& extras, const QueryBatch& queries,
                             AreaRule rule = AreaRule::kDiagonal);

}  // namespace ddir::lif
