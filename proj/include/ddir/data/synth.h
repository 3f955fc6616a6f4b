// Synthetic LR/HR pairs with controlled degradations.
//
// An HR source image is blurred with a Gaussian whose sigma varies per pixel,
// bicubic-downsampled, scaled by a per-channel gain, shifted by a per-channel
// offset, clamped, and optionally corrupted with Gaussian noise.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "ddir/data/manifest.h"
#include "ddir/imaging/image.h"

namespace ddir::data {

struct SyntheticConfig {
  double offset_range = 0.08;  // offsets drawn from [-range, range]
  double gain_min = 0.9;
  double gain_max = 1.1;
  double sigma_min = 0.2;  // blur sigma in HR pixels; 0 disables blur
  double sigma_max = 1.5;
  std::size_t sigma_grid = 4;  // coarse sigma grid is sigma_grid x sigma_grid
  double noise_sigma = 0;
  std::uint64_t seed = 0;

  // Throws UsageError on empty or inverted ranges or negative values.
  void validate() const;
};

// Parameters applied to one pair.
struct Degradation {
  std::array<double, 3> gain{1, 1, 1};
  std::array<double, 3> offset{0, 0, 0};
  std::size_t grid = 1;
  std::vector<double> sigma{0};  // grid x grid, row-major
  double noise_sigma = 0;
  std::uint64_t noise_seed = 0;
};

// Draws gain, offset and sigma grid from `cfg`.
Degradation draw_degradation(const SyntheticConfig& cfg, std::mt19937_64& rng);

// Sigma at pixel (y, x): bilinear interpolation between grid nodes spread
// evenly over the pixel centres, node k at k * (extent - 1) / (grid - 1).
double sigma_at(const Degradation& d, std::size_t y, std::size_t x, std::size_t height,
                std::size_t width);

// Per-pixel normalised Gaussian of radius ceil(3 sigma), edge-clamped taps.
// Pixels with sigma below 1e-6 are copied.
imaging::Image spatially_variant_blur(const imaging::Image& img, const Degradation& d);

// Blur, downsample to (lr_height, lr_width), gain, offset, clamp, noise,
// clamp.
imaging::Image degrade(const imaging::Image& hr, const Degradation& d, std::size_t lr_height,
                       std::size_t lr_width);

// LR size for a source extent: floor(extent / scale). The HR stored with the
// pair is the source cropped to round(scale * LR extent).
std::size_t lr_extent(std::size_t hr_extent, double scale);

// For every image in `source_dir` (PNG or PPM, sorted by name; the scene id is
// the file stem) and every scale, writes <out>/<scene>/<scale>/{lr,hr}.png
// and meta.json (gain, offset, sigma grid, noise, seed) and returns the
// manifest written to <out>/manifest.csv. Parameters for a pair depend only
// on (cfg.seed, scene, scale).
Manifest synth_generate(const std::filesystem::path& source_dir, const SyntheticConfig& cfg,
                        const std::vector<double>& scales, const std::filesystem::path& out);

// Procedural source images.
enum class SourceKind {
  kSmooth,      // a few broad Gaussian blobs over a gradient, band-limited
  kTexture,     // random oriented sinusoids, mixed frequencies
  kStationary,  // oriented sinusoids with period about `period` pixels and
                // per-channel mean 0.5 before 8-bit quantization
};

imaging::Image procedural_image(SourceKind kind, std::size_t height, std::size_t width,
                                std::uint64_t seed, double period = 10);

// Writes `count` procedural images named src000.png, src001.png, ... into
// `dir` (created if needed). Image i uses a seed derived from (seed, i).
void write_procedural_sources(const std::filesystem::path& dir, SourceKind kind,
                              std::size_t count, std::size_t height, std::size_t width,
                              std::uint64_t seed, double period = 10);

}  // namespace ddir::data
