#include "ddir/data/synth.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "ddir/common/error.h"
#include "ddir/imaging/image_io.h"
#include "ddir/imaging/resample.h"
#include "ddir/numerics/init.h"
#include "json.hpp"

namespace ddir::data {
namespace fs = std::filesystem;
using imaging::Image;

namespace {

std::seed_seq::result_type lo(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::seed_seq::result_type hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

std::mt19937_64 pair_rng(std::uint64_t seed, const std::string& scene, double scale) {
  const std::uint64_t a = numerics::fnv1a(scene), b = numerics::fnv1a(format_scale(scale));
  std::seed_seq seq{lo(seed), hi(seed), lo(a), hi(a), lo(b), hi(b)};
  return std::mt19937_64(seq);
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

// Maps each channel affinely so its samples span [lo, hi].
void stretch(std::vector<double>& plane, double lo_v, double hi_v) {
  const auto [mn, mx] = std::minmax_element(plane.begin(), plane.end());
  const double a = *mn, span = *mx - *mn;
  for (double& v : plane) v = span > 0 ? lo_v + (hi_v - lo_v) * (v - a) / span : 0.5 * (lo_v + hi_v);
}

struct Wave {
  double ky, kx, phase, amp;
};

std::vector<double> render_waves(const std::vector<Wave>& waves, std::size_t h, std::size_t w) {
  std::vector<double> plane(h * w, 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double v = 0;
      for (const Wave& wv : waves) {
        v += wv.amp * std::sin(wv.ky * static_cast<double>(y) + wv.kx * static_cast<double>(x) + wv.phase);
      }
      plane[y * w + x] = v;
    }
  }
  return plane;
}

std::vector<Wave> random_waves(std::mt19937_64& rng, std::size_t count, double period_lo,
                               double period_hi) {
  std::uniform_real_distribution<double> angle(0, std::numbers::pi), phase(0, 2 * std::numbers::pi),
      period(period_lo, period_hi), amp(0.5, 1.0);
  std::vector<Wave> waves;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = angle(rng), k = 2 * std::numbers::pi / period(rng);
    waves.push_back({k * std::sin(t), k * std::cos(t), phase(rng), amp(rng)});
  }
  return waves;
}

Image from_planes(const std::array<std::vector<double>, 3>& planes, std::size_t h, std::size_t w) {
  Image img(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < 3; ++c) img.at(y, x, c) = clamp01(planes[c][y * w + x]);
    }
  }
  return img;
}

Image smooth_image(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  std::uniform_real_distribution<double> unit(0, 1), slope(-1, 1);
  const double size = static_cast<double>(std::max(h, w));
  std::array<std::vector<double>, 3> planes;
  for (auto& plane : planes) {
    const double gy = slope(rng), gx = slope(rng);
    struct Blob {
      double cy, cx, s, a;
    };
    std::vector<Blob> blobs;
    for (int k = 0; k < 4; ++k) {
      blobs.push_back({unit(rng) * static_cast<double>(h), unit(rng) * static_cast<double>(w),
                       size * (0.25 + 0.25 * unit(rng)), slope(rng)});
    }
    plane.assign(h * w, 0.0);
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double fy = static_cast<double>(y) / size, fx = static_cast<double>(x) / size;
        double v = gy * fy + gx * fx;
        for (const Blob& b : blobs) {
          const double dy = static_cast<double>(y) - b.cy, dx = static_cast<double>(x) - b.cx;
          v += b.a * std::exp(-(dy * dy + dx * dx) / (2 * b.s * b.s));
        }
        plane[y * w + x] = v;
      }
    }
    stretch(plane, 0.15 + 0.1 * unit(rng), 0.75 + 0.1 * unit(rng));
  }
  return from_planes(planes, h, w);
}

Image texture_image(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  std::array<std::vector<double>, 3> planes;
  const std::vector<Wave> shared = random_waves(rng, 4, 4, 24);
  for (auto& plane : planes) {
    std::vector<Wave> waves = shared;
    for (const Wave& extra : random_waves(rng, 2, 4, 24)) waves.push_back(extra);
    plane = render_waves(waves, h, w);
    stretch(plane, 0.1, 0.9);
  }
  return from_planes(planes, h, w);
}

Image stationary_image(std::mt19937_64& rng, std::size_t h, std::size_t w, double period) {
  std::array<std::vector<double>, 3> planes;
  for (auto& plane : planes) {
    plane = render_waves(random_waves(rng, 6, 0.8 * period, 1.25 * period), h, w);
    double mean = 0, peak = 0;
    for (double v : plane) mean += v;
    mean /= static_cast<double>(plane.size());
    for (double v : plane) peak = std::max(peak, std::abs(v - mean));
    const double gain = peak > 0 ? 0.3 / peak : 0;
    for (double& v : plane) v = 0.5 + gain * (v - mean);
  }
  return from_planes(planes, h, w);
}

}  // namespace

void SyntheticConfig::validate() const {
  if (!(offset_range >= 0)) throw UsageError("synth: offset range must be non-negative");
  if (!(gain_min > 0 && gain_min <= gain_max)) throw UsageError("synth: need 0 < gain_min <= gain_max");
  if (!(sigma_min >= 0 && sigma_min <= sigma_max)) throw UsageError("synth: need 0 <= sigma_min <= sigma_max");
  if (sigma_grid < 1) throw UsageError("synth: sigma grid must be at least 1 x 1");
  if (!(noise_sigma >= 0)) throw UsageError("synth: noise sigma must be non-negative");
}

Degradation draw_degradation(const SyntheticConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  std::uniform_real_distribution<double> gain(cfg.gain_min, cfg.gain_max),
      offset(-cfg.offset_range, cfg.offset_range), sigma(cfg.sigma_min, cfg.sigma_max);
  Degradation d;
  for (double& g : d.gain) g = gain(rng);
  for (double& c : d.offset) c = offset(rng);
  d.grid = cfg.sigma_grid;
  d.sigma.resize(d.grid * d.grid);
  for (double& s : d.sigma) s = sigma(rng);
  d.noise_sigma = cfg.noise_sigma;
  d.noise_seed = rng();
  return d;
}

double sigma_at(const Degradation& d, std::size_t y, std::size_t x, std::size_t height,
                std::size_t width) {
  if (d.sigma.size() != d.grid * d.grid || d.grid == 0) {
    throw UsageError("degradation sigma grid does not hold grid x grid values");
  }
  if (d.grid == 1) return d.sigma[0];
  auto locate = [&](std::size_t p, std::size_t n) {
    const double t = n > 1 ? static_cast<double>(p) * static_cast<double>(d.grid - 1) /
                                 static_cast<double>(n - 1)
                           : 0.0;
    const std::size_t k = std::min(static_cast<std::size_t>(t), d.grid - 2);
    return std::pair{k, t - static_cast<double>(k)};
  };
  const auto [ky, fy] = locate(y, height);
  const auto [kx, fx] = locate(x, width);
  auto s = [&](std::size_t i, std::size_t j) { return d.sigma[i * d.grid + j]; };
  return (1 - fy) * ((1 - fx) * s(ky, kx) + fx * s(ky, kx + 1)) +
         fy * ((1 - fx) * s(ky + 1, kx) + fx * s(ky + 1, kx + 1));
}

Image spatially_variant_blur(const Image& img, const Degradation& d) {
  const std::size_t h = img.height(), w = img.width();
  Image out(h, w);
  std::vector<double> weights;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double sigma = sigma_at(d, y, x, h, w);
      if (sigma < 1e-6) {
        for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, c);
        continue;
      }
      const long r = static_cast<long>(std::ceil(3 * sigma));
      const std::size_t side = static_cast<std::size_t>(2 * r + 1);
      weights.assign(side * side, 0.0);
      double total = 0;
      for (long dy = -r; dy <= r; ++dy) {
        for (long dx = -r; dx <= r; ++dx) {
          const double v = std::exp(-static_cast<double>(dy * dy + dx * dx) / (2 * sigma * sigma));
          weights[static_cast<std::size_t>((dy + r) * (2 * r + 1) + dx + r)] = v;
          total += v;
        }
      }
      std::array<double, 3> acc{0, 0, 0};
      for (long dy = -r; dy <= r; ++dy) {
        const long sy = std::clamp(static_cast<long>(y) + dy, 0L, static_cast<long>(h) - 1);
        for (long dx = -r; dx <= r; ++dx) {
          const long sx = std::clamp(static_cast<long>(x) + dx, 0L, static_cast<long>(w) - 1);
          const double wt = weights[static_cast<std::size_t>((dy + r) * (2 * r + 1) + dx + r)];
          for (std::size_t c = 0; c < 3; ++c) {
            acc[c] += wt * img.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), c);
          }
        }
      }
      for (std::size_t c = 0; c < 3; ++c) out.at(y, x, c) = static_cast<float>(acc[c] / total);
    }
  }
  return out;
}

Image degrade(const Image& hr, const Degradation& d, std::size_t lr_height, std::size_t lr_width) {
  Image lr = imaging::bicubic_resize(spatially_variant_blur(hr, d), {lr_height, lr_width});
  for (std::size_t y = 0; y < lr_height; ++y) {
    for (std::size_t x = 0; x < lr_width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        lr.at(y, x, c) = clamp01(d.gain[c] * lr.at(y, x, c) + d.offset[c]);
      }
    }
  }
  if (d.noise_sigma > 0) {
    std::mt19937_64 rng(d.noise_seed);
    std::normal_distribution<double> noise(0, d.noise_sigma);
    for (float& v : lr.samples()) v = clamp01(v + noise(rng));
  }
  return lr;
}

std::size_t lr_extent(std::size_t hr_extent, double scale) {
  if (!(scale > 0)) throw UsageError("scale must be positive");
  return static_cast<std::size_t>(std::floor(static_cast<double>(hr_extent) / scale + 1e-9));
}

Manifest synth_generate(const fs::path& source_dir, const SyntheticConfig& cfg,
                        const std::vector<double>& scales, const fs::path& out) {
  cfg.validate();
  if (scales.empty()) throw UsageError("synth: no scales given");
  std::vector<fs::path> sources;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(source_dir, ec)) {
    const std::string ext = entry.path().extension().string();
    if (entry.is_regular_file() && (ext == ".png" || ext == ".ppm" || ext == ".pnm")) {
      sources.push_back(entry.path());
    }
  }
  if (ec) throw DataError("cannot list source directory " + source_dir.string() + ": " + ec.message());
  if (sources.empty()) throw DataError("no PNG or PPM images in " + source_dir.string());
  std::sort(sources.begin(), sources.end());

  auto make_dir = [](const fs::path& dir) {
    std::error_code e;
    fs::create_directories(dir, e);
    if (e) throw DataError("cannot create directory " + dir.string() + ": " + e.message());
  };
  make_dir(out);

  Manifest manifest;
  manifest.root = out;
  for (const fs::path& src : sources) {
    const Image source = imaging::read_image(src);
    const std::string scene = src.stem().string();
    for (double s : scales) {
      const std::size_t lh = lr_extent(source.height(), s), lw = lr_extent(source.width(), s);
      if (lh == 0 || lw == 0) {
        throw UsageError("synth: " + src.string() + " is too small for scale " + format_scale(s));
      }
      const std::size_t hh = static_cast<std::size_t>(std::llround(s * static_cast<double>(lh)));
      const std::size_t hw = static_cast<std::size_t>(std::llround(s * static_cast<double>(lw)));
      const Image hr = source.crop(0, 0, std::min(hh, source.height()), std::min(hw, source.width()));
      std::mt19937_64 rng = pair_rng(cfg.seed, scene, s);
      const Degradation d = draw_degradation(cfg, rng);
      const Image lr = degrade(hr, d, lh, lw);

      const std::string rel = scene + "/" + format_scale(s);
      make_dir(out / rel);
      imaging::write_image(lr, out / rel / "lr.png");
      imaging::write_image(hr, out / rel / "hr.png");

      nlohmann::json meta;
      meta["scene"] = scene;
      meta["scale"] = s;
      meta["seed"] = cfg.seed;
      meta["gain"] = d.gain;
      meta["offset"] = d.offset;
      std::vector<std::vector<double>> grid(d.grid);
      for (std::size_t i = 0; i < d.grid; ++i) {
        grid[i].assign(d.sigma.begin() + static_cast<long>(i * d.grid),
                       d.sigma.begin() + static_cast<long>((i + 1) * d.grid));
      }
      meta["sigma_grid"] = grid;
      meta["noise_sigma"] = d.noise_sigma;
      meta["noise_seed"] = d.noise_seed;
      meta["lr_size"] = {lh, lw};
      meta["hr_size"] = {hr.height(), hr.width()};
      std::ofstream m(out / rel / "meta.json");
      if (!m || !(m << meta.dump(2) << "\n")) {
        throw DataError("cannot write " + (out / rel / "meta.json").string());
      }
      manifest.records.push_back({scene, s, rel + "/lr.png", rel + "/hr.png"});
    }
  }
  write_manifest(manifest, out / "manifest.csv");
  return manifest;
}

Image procedural_image(SourceKind kind, std::size_t height, std::size_t width, std::uint64_t seed,
                       double period) {
  if (height == 0 || width == 0) throw UsageError("procedural image extents must be positive");
  if (!(period > 0)) throw UsageError("procedural period must be positive");
  std::seed_seq seq{lo(seed), hi(seed), static_cast<std::uint32_t>(kind)};
  std::mt19937_64 rng(seq);
  switch (kind) {
    case SourceKind::kSmooth:
      return smooth_image(rng, height, width);
    case SourceKind::kTexture:
      return texture_image(rng, height, width);
    case SourceKind::kStationary:
      return stationary_image(rng, height, width, period);
  }
  throw UsageError("unknown procedural source kind");
}

void write_procedural_sources(const fs::path& dir, SourceKind kind, std::size_t count,
                              std::size_t height, std::size_t width, std::uint64_t seed,
                              double period) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "src%03zu.png", i);
    const std::uint64_t s = numerics::fnv1a(std::to_string(seed) + "/" + std::to_string(i));
    imaging::write_image(procedural_image(kind, height, width, s, period), dir / name);
  }
}

}  // namespace ddir::data
