#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "ddir/data/dataset.h"
#include "ddir/data/manifest.h"
#include "ddir/data/synth.h"
#include "ddir/imaging/image_io.h"
#include "ddir/imaging/resample.h"
#include "ddir/lif/lif.h"
#include "json.hpp"

using namespace ddir;
using namespace ddir::data;
using imaging::Image;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "ddir_test_data" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// Pixel (y, x) holds (y / 255, x / 255, tag / 255) so a sample reveals where
// it came from.
Image coordinate_image(std::size_t h, std::size_t w, int tag) {
  Image img(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      img.at(y, x, 0) = float(y / 255.0);
      img.at(y, x, 1) = float(x / 255.0);
      img.at(y, x, 2) = float(tag / 255.0);
    }
  }
  return img;
}

long decode(float v) { return std::lround(double(v) * 255.0); }

Image random_image(std::mt19937& rng, std::size_t h, std::size_t w, float lo, float hi) {
  std::uniform_real_distribution<float> d(lo, hi);
  Image img(h, w);
  for (float& v : img.samples()) v = d(rng);
  return img;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double keys(double x) {
  const double a = -0.5, t = std::abs(x);
  if (t <= 1) return (a + 2) * t * t * t - (a + 3) * t * t + 1;
  if (t < 2) return a * t * t * t - 5 * a * t * t + 8 * a * t - 4 * a;
  return 0.0;
}

// Independent scalar degradation: per-pixel Gaussian with bilinear sigma,
// 2-D direct-summation cubic resampling, gain and offset.
Image scalar_degrade(const Image& hr, const Degradation& d, std::size_t lh, std::size_t lw) {
  const std::size_t h = hr.height(), w = hr.width(), g = d.grid;
  std::vector<double> blurred(h * w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double sigma = d.sigma[0];
      if (g > 1) {
        const double ty = double(y) * double(g - 1) / double(h - 1);
        const double tx = double(x) * double(g - 1) / double(w - 1);
        const std::size_t iy = std::min(std::size_t(ty), g - 2), ix = std::min(std::size_t(tx), g - 2);
        const double fy = ty - double(iy), fx = tx - double(ix);
        sigma = 0;
        for (std::size_t a = 0; a < 2; ++a) {
          for (std::size_t b = 0; b < 2; ++b) {
            sigma += (a ? fy : 1 - fy) * (b ? fx : 1 - fx) * d.sigma[(iy + a) * g + ix + b];
          }
        }
      }
      const long r = long(std::ceil(3 * sigma));
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0, norm = 0;
        for (long dy = -r; dy <= r; ++dy) {
          for (long dx = -r; dx <= r; ++dx) {
            const double wt = std::exp(-double(dy * dy + dx * dx) / (2 * sigma * sigma));
            const long sy = std::clamp(long(y) + dy, 0L, long(h) - 1);
            const long sx = std::clamp(long(x) + dx, 0L, long(w) - 1);
            acc += wt * hr.at(sy, sx, c);
            norm += wt;
          }
        }
        blurred[(y * w + x) * 3 + c] = float(acc / norm);
      }
    }
  }
  Image out(lh, lw);
  for (std::size_t y = 0; y < lh; ++y) {
    const double sy = (y + 0.5) * double(h) / double(lh) - 0.5;
    for (std::size_t x = 0; x < lw; ++x) {
      const double sx = (x + 0.5) * double(w) / double(lw) - 0.5;
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0;
        for (long j = long(std::floor(sy)) - 1; j <= long(std::floor(sy)) + 2; ++j) {
          for (long i = long(std::floor(sx)) - 1; i <= long(std::floor(sx)) + 2; ++i) {
            const long cj = std::clamp(j, 0L, long(h) - 1), ci = std::clamp(i, 0L, long(w) - 1);
            acc += keys(sy - j) * keys(sx - i) * blurred[(cj * w + ci) * 3 + c];
          }
        }
        const double resampled = std::clamp(acc, 0.0, 1.0);
        out.at(y, x, c) = float(std::clamp(d.gain[c] * resampled + d.offset[c], 0.0, 1.0));
      }
    }
  }
  return out;
}

double max_diff(const Image& a, const Image& b) {
  REQUIRE(a.height() == b.height());
  REQUIRE(a.width() == b.width());
  double m = 0;
  for (std::size_t i = 0; i < a.samples().size(); ++i) {
    m = std::max(m, double(std::abs(a.samples()[i] - b.samples()[i])));
  }
  return m;
}

SyntheticConfig degenerate_config() {
  SyntheticConfig cfg;
  cfg.offset_range = 0;
  cfg.gain_min = cfg.gain_max = 1;
  cfg.sigma_min = cfg.sigma_max = 0;
  cfg.noise_sigma = 0;
  return cfg;
}

}  // namespace

TEST_CASE("load_manifest: format") {
  const fs::path dir = fresh_dir("format");
  fs::create_directories(dir / "lr");
  fs::create_directories(dir / "hr");
  imaging::write_image(Image(4, 4), dir / "lr" / "a.png");
  imaging::write_image(Image(6, 6), dir / "hr" / "a.png");

  SUBCASE("empty file is a valid empty manifest") {
    write_text(dir / "m.csv", "");
    CHECK(load_manifest(dir / "m.csv").records.empty());
  }
  SUBCASE("one line without header") {
    write_text(dir / "m.csv", "scene001,1.5,lr/a.png,hr/a.png\n");
    const Manifest m = load_manifest(dir / "m.csv");
    REQUIRE(m.records.size() == 1);
    CHECK(m.records[0].scene == "scene001");
    CHECK(m.records[0].scale == 1.5);
    CHECK(m.lr_file(m.records[0]) == dir / "lr" / "a.png");
  }
  SUBCASE("header and blank lines are skipped") {
    write_text(dir / "m.csv", "scene,scale,lr_path,hr_path\n\nscene001,1.5,lr/a.png,hr/a.png\r\n\n");
    CHECK(load_manifest(dir / "m.csv").records.size() == 1);
  }
  SUBCASE("malformed lines report their line number") {
    for (const char* body : {"scene,scale,lr_path,hr_path\nscene001,1.5,lr/a.png\n",
                             "scene,scale,lr_path,hr_path\nscene001,abc,lr/a.png,hr/a.png\n",
                             "scene,scale,lr_path,hr_path\nscene001,-2,lr/a.png,hr/a.png\n",
                             "scene,scale,lr_path,hr_path\nscene001,1.5,,hr/a.png\n"}) {
      write_text(dir / "m.csv", body);
      try {
        load_manifest(dir / "m.csv");
        FAIL("expected DataError");
      } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("m.csv:2:") != std::string::npos);
      }
    }
  }
  SUBCASE("duplicate (scene, scale) is rejected") {
    write_text(dir / "m.csv", "s,1.5,lr/a.png,hr/a.png\ns,1.50,lr/a.png,hr/a.png\n");
    CHECK_THROWS_AS(load_manifest(dir / "m.csv"), DataError);
  }
  SUBCASE("missing image") {
    write_text(dir / "m.csv", "s,1.5,lr/missing.png,hr/a.png\n");
    CHECK_THROWS_AS(load_manifest(dir / "m.csv"), DataError);
  }
  CHECK_THROWS_AS(load_manifest(dir / "nope.csv"), DataError);
}

TEST_CASE("load_manifest: HR must be round(scale * LR) within one pixel") {
  const fs::path dir = fresh_dir("dims");
  imaging::write_image(Image(48, 48), dir / "lr.png");
  // round(2.0 * 48) = 96; 100 is four pixels off.
  imaging::write_image(Image(100, 100), dir / "hr100.png");
  imaging::write_image(Image(97, 95), dir / "hr97.png");
  imaging::write_image(Image(96, 98), dir / "hr98.png");
  write_text(dir / "bad.csv", "scene7,2.0,lr.png,hr100.png\n");
  try {
    load_manifest(dir / "bad.csv");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("scene7") != std::string::npos);
    CHECK(std::string(e.what()).find("96x96") != std::string::npos);
  }
  write_text(dir / "ok.csv", "scene7,2.0,lr.png,hr97.png\n");
  CHECK(load_manifest(dir / "ok.csv").records.size() == 1);
  write_text(dir / "off2.csv", "scene7,2.0,lr.png,hr98.png\n");
  CHECK_THROWS_AS(load_manifest(dir / "off2.csv"), DataError);

  // A published benchmark pairs 480 x 730 at x1.7 with 816 x 1241.
  imaging::write_image(Image(480, 730), dir / "s1_lr.ppm");
  imaging::write_image(Image(816, 1241), dir / "s1_hr.ppm");
  write_text(dir / "s1.csv", "real,1.7,s1_lr.ppm,s1_hr.ppm\n");
  CHECK(load_manifest(dir / "s1.csv").records.size() == 1);

  write_text(dir / "small.csv", "scene7,2.0,lr.png,hr97.png\n");
  CHECK_THROWS_AS(load_manifest(dir / "small.csv", Split::kTrain, 49), DataError);
  CHECK(load_manifest(dir / "small.csv", Split::kTrain, 48).split == Split::kTrain);
}

TEST_CASE("manifest write/load round trip is lossless") {
  const fs::path dir = fresh_dir("roundtrip");
  Manifest m;
  m.root = dir;
  std::mt19937 rng(1);
  for (int i = 0; i < 5; ++i) {
    const double scale = 1.0 + std::uniform_real_distribution<double>(0.1, 3.0)(rng);
    const std::size_t lh = 3 + i, lw = 5 + i;
    const std::string lr = "lr" + std::to_string(i) + ".png", hr = "sub/hr" + std::to_string(i) + ".png";
    fs::create_directories(dir / "sub");
    imaging::write_image(Image(lh, lw), dir / lr);
    imaging::write_image(Image(std::size_t(std::llround(scale * lh)), std::size_t(std::llround(scale * lw))),
                         dir / hr);
    m.records.push_back({"scene" + std::to_string(i), scale, lr, hr});
  }
  write_manifest(m, dir / "m.csv");
  const Manifest back = load_manifest(dir / "m.csv");
  REQUIRE(back.records.size() == m.records.size());
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    CHECK(back.records[i].scene == m.records[i].scene);
    CHECK(back.records[i].scale == m.records[i].scale);
    CHECK(back.records[i].lr_path == m.records[i].lr_path);
    CHECK(back.records[i].hr_path == m.records[i].hr_path);
  }
  CHECK(format_scale(2.0) == "2.0");
  CHECK(format_scale(1.5) == "1.5");
  CHECK(format_scale(3.7) == "3.7");
}

TEST_CASE("hr_patch_side") {
  CHECK(hr_patch_side(48, 2.0) == 96);
  CHECK(hr_patch_side(48, 1.5) == 72);
  CHECK(hr_patch_side(48, 4.0) == 192);
  CHECK(hr_patch_side(48, 1.7) == 82);  // 81.6 rounds up
}

TEST_CASE("sample_batch: geometry, targets and determinism") {
  std::vector<Pair> pairs;
  const std::vector<double> scales{2.0, 1.5, 1.7, 3.0};
  for (std::size_t i = 0; i < scales.size(); ++i) {
    const std::size_t lh = 20 + 3 * i, lw = 18 + 2 * i;
    const std::size_t hh = std::size_t(std::llround(scales[i] * lh)) - (i == 2 ? 1 : 0);
    const std::size_t hw = std::size_t(std::llround(scales[i] * lw));
    pairs.push_back({PairRecord{"p" + std::to_string(i), scales[i], "", ""}, coordinate_image(lh, lw, int(i)),
                     coordinate_image(hh, hw, int(i))});
  }
  const Dataset ds(pairs);
  const BatchSpec spec{32, 16, 200};
  const TrainBatch batch = sample_batch(ds, 99, spec);
  REQUIRE(batch.items.size() == 32);

  for (std::size_t b = 0; b < batch.items.size(); ++b) {
    const model::TrainItem& item = batch.items[b];
    const Pair& pair = ds.pairs()[batch.pair_index[b]];
    const double s = pair.record.scale;
    CHECK(batch.scales[b] == s);
    CHECK(item.lr.height() == 16);
    CHECK(item.lr.width() == 16);
    const long tag = decode(item.lr.at(0, 0, 2));
    CHECK(std::size_t(tag) == batch.pair_index[b]);

    const std::size_t side = std::size_t(std::llround(16 * s));
    CHECK(item.hr_height == side);
    CHECK(item.hr_width == side);
    // LR window origin from the encoded coordinates; the window is contiguous.
    const long y0 = decode(item.lr.at(0, 0, 0)), x0 = decode(item.lr.at(0, 0, 1));
    CHECK(decode(item.lr.at(15, 15, 0)) == y0 + 15);
    CHECK(decode(item.lr.at(15, 15, 1)) == x0 + 15);
    const long hy = std::min(std::lround(s * y0), long(pair.hr.height() - side));
    const long hx = std::min(std::lround(s * x0), long(pair.hr.width() - side));

    const lif::QueryBatch& q = item.queries;
    q.validate();
    REQUIRE(q.size() == spec.queries);
    const std::vector<double> grid = lif::coord_grid(side, side);
    std::set<std::size_t> seen;
    for (std::size_t k = 0; k < q.size(); ++k) {
      const double u = ((q.coords[2 * k] + 1) * double(side) - 1) / 2;
      const double v = ((q.coords[2 * k + 1] + 1) * double(side) - 1) / 2;
      const std::size_t py = std::size_t(std::lround(u)), px = std::size_t(std::lround(v));
      REQUIRE(py < side);
      REQUIRE(px < side);
      CHECK(q.coords[2 * k] == grid[2 * (py * side + px)]);
      CHECK(q.coords[2 * k + 1] == grid[2 * (py * side + px) + 1]);
      CHECK(q.cells[2 * k] == 2.0 / double(side));
      seen.insert(py * side + px);
      CHECK(decode(q.targets[3 * k]) == hy + long(py));
      CHECK(decode(q.targets[3 * k + 1]) == hx + long(px));
      CHECK(decode(q.targets[3 * k + 2]) == tag);
    }
    CHECK(seen.size() == spec.queries);
  }

  const TrainBatch again = sample_batch(ds, 99, spec);
  const TrainBatch other = sample_batch(ds, 100, spec);
  bool same = true, differs = false;
  for (std::size_t b = 0; b < batch.items.size(); ++b) {
    same = same && again.items[b].lr == batch.items[b].lr &&
           again.items[b].queries.coords == batch.items[b].queries.coords &&
           again.items[b].queries.targets == batch.items[b].queries.targets;
    differs = differs || other.items[b].queries.coords != batch.items[b].queries.coords;
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("sample_batch: every HR patch pixel once when queries fill the patch") {
  std::vector<Pair> pairs{{PairRecord{"a", 1.0, "", ""}, coordinate_image(12, 12, 0), coordinate_image(12, 12, 0)}};
  const TrainBatch b = sample_batch(Dataset(pairs), 3, BatchSpec{2, 8, 64});
  std::set<std::pair<double, double>> coords;
  for (std::size_t k = 0; k < 64; ++k) coords.emplace(b.items[0].queries.coords[2 * k], b.items[0].queries.coords[2 * k + 1]);
  CHECK(coords.size() == 64);
}

TEST_CASE("sample_batch: pairs and window origins are drawn uniformly") {
  std::vector<Pair> pairs;
  for (int i = 0; i < 4; ++i) {
    pairs.push_back({PairRecord{std::to_string(i), 1.0, "", ""}, coordinate_image(10, 10, i), coordinate_image(10, 10, i)});
  }
  const TrainBatch b = sample_batch(Dataset(pairs), 5, BatchSpec{4000, 8, 1});
  std::array<int, 4> counts{};
  std::array<int, 3> origins{};
  for (std::size_t k = 0; k < b.items.size(); ++k) {
    ++counts[b.pair_index[k]];
    ++origins[decode(b.items[k].lr.at(0, 0, 0))];
  }
  for (int c : counts) CHECK(std::abs(c - 1000) < 120);
  for (int c : origins) CHECK(std::abs(c - 4000 / 3) < 150);
}

TEST_CASE("sample_batch: errors") {
  std::vector<Pair> small{{PairRecord{"a", 2.0, "", ""}, Image(10, 12), Image(20, 24)}};
  CHECK_THROWS_AS(sample_batch(Dataset(small), 1, BatchSpec{1, 11, 4}), DataError);
  CHECK_THROWS_AS(sample_batch(Dataset(small), 1, BatchSpec{1, 8, 257}), UsageError);
  CHECK_THROWS_AS(sample_batch(Dataset({}), 1, BatchSpec{}), DataError);
  std::vector<Pair> short_hr{{PairRecord{"a", 2.0, "", ""}, Image(10, 10), Image(19, 19)}};
  CHECK_THROWS_AS(sample_batch(Dataset(short_hr), 1, BatchSpec{1, 10, 4}), DataError);
}

TEST_CASE("sigma_at and the spatially variant blur") {
  Degradation d;
  d.grid = 3;
  d.sigma = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  // Nodes sit at 0, 4, 8 on a 9-pixel axis.
  CHECK(sigma_at(d, 0, 0, 9, 9) == doctest::Approx(0.1));
  CHECK(sigma_at(d, 4, 8, 9, 9) == doctest::Approx(0.6));
  CHECK(sigma_at(d, 8, 8, 9, 9) == doctest::Approx(0.9));
  CHECK(sigma_at(d, 2, 2, 9, 9) == doctest::Approx((0.1 + 0.2 + 0.4 + 0.5) / 4));

  std::mt19937 rng(2);
  const Image img = random_image(rng, 9, 11, 0, 1);
  Degradation none;
  CHECK(spatially_variant_blur(img, none) == img);
  Image flat(9, 11, 0.3f);
  CHECK(max_diff(spatially_variant_blur(flat, d), flat) < 1e-6);
}

TEST_CASE("degrade: degenerate settings give the plain bicubic downsample") {
  std::mt19937 rng(3);
  const Image hr = random_image(rng, 24, 30, 0, 1);
  std::mt19937_64 r64(1);
  const Degradation d = draw_degradation(degenerate_config(), r64);
  CHECK(max_diff(degrade(hr, d, 12, 15), imaging::bicubic_resize(hr, {12, 15})) < 1e-6);
}

TEST_CASE("degrade: a constant offset shifts the mean by that offset") {
  std::mt19937 rng(4);
  const Image hr = random_image(rng, 32, 32, 0.3f, 0.7f);
  Degradation d;
  d.offset = {0.05, 0.05, 0.05};
  const Image base = imaging::bicubic_resize(hr, {16, 16}), shifted = degrade(hr, d, 16, 16);
  double sb = 0, ss = 0;
  for (std::size_t i = 0; i < base.samples().size(); ++i) {
    REQUIRE(shifted.samples()[i] < 1.0f);
    sb += base.samples()[i];
    ss += shifted.samples()[i];
  }
  CHECK(std::abs((ss - sb) / double(base.samples().size()) - 0.05) < 1e-6);
}

TEST_CASE("degrade: matches an independent scalar pipeline") {
  std::mt19937 rng(5);
  SyntheticConfig cfg;
  for (int trial = 0; trial < 8; ++trial) {
    cfg.sigma_grid = 1 + trial % 4;
    std::mt19937_64 r64(trial);
    const Degradation d = draw_degradation(cfg, r64);
    const std::size_t h = 10 + rng() % 12, w = 10 + rng() % 12;
    const Image hr = random_image(rng, h, w, 0, 1);
    const std::size_t lh = 3 + rng() % 7, lw = 3 + rng() % 7;
    CHECK(max_diff(degrade(hr, d, lh, lw), scalar_degrade(hr, d, lh, lw)) < 1e-6);
  }
}

TEST_CASE("draw_degradation respects the configured ranges") {
  SyntheticConfig cfg;
  std::mt19937_64 rng(6);
  for (int i = 0; i < 200; ++i) {
    const Degradation d = draw_degradation(cfg, rng);
    for (double g : d.gain) CHECK((g >= 0.9 && g <= 1.1));
    for (double c : d.offset) CHECK(std::abs(c) <= 0.08);
    CHECK(d.sigma.size() == 16);
    for (double s : d.sigma) CHECK((s >= 0.2 && s <= 1.5));
  }
  SyntheticConfig bad;
  bad.gain_min = 1.2;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = SyntheticConfig{};
  bad.sigma_min = -1;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("noise is seeded and bounded") {
  std::mt19937 rng(7);
  const Image hr = random_image(rng, 16, 16, 0.2f, 0.8f);
  Degradation d;
  d.noise_sigma = 0.02;
  d.noise_seed = 11;
  const Image a = degrade(hr, d, 8, 8), b = degrade(hr, d, 8, 8);
  CHECK(a == b);
  const Image clean = imaging::bicubic_resize(hr, {8, 8});
  CHECK(max_diff(a, clean) > 0);
  CHECK(max_diff(a, clean) < 0.2);
}

TEST_CASE("synth_generate: layout, manifest, metadata and determinism") {
  const fs::path root = fresh_dir("synth");
  write_procedural_sources(root / "src", SourceKind::kSmooth, 3, 40, 36, 9);
  SyntheticConfig cfg;
  cfg.seed = 21;
  const std::vector<double> scales{1.5, 2.0, 3.7};
  const Manifest m = synth_generate(root / "src", cfg, scales, root / "a");
  CHECK(m.records.size() == 9);

  const Manifest loaded = load_manifest(root / "a" / "manifest.csv");
  REQUIRE(loaded.records.size() == 9);
  CHECK(loaded.scales() == scales);
  for (const PairRecord& r : loaded.records) {
    CHECK(r.lr_path == r.scene + "/" + format_scale(r.scale) + "/lr.png");
    const auto lr = imaging::read_image_dims(loaded.lr_file(r));
    const auto hr = imaging::read_image_dims(loaded.hr_file(r));
    CHECK(lr.height == std::size_t(std::floor(40 / r.scale + 1e-9)));
    CHECK(lr.width == std::size_t(std::floor(36 / r.scale + 1e-9)));
    CHECK(hr.height == std::size_t(std::llround(r.scale * lr.height)));
    CHECK(hr.width == std::size_t(std::llround(r.scale * lr.width)));

    std::ifstream in(root / "a" / r.scene / format_scale(r.scale) / "meta.json");
    const nlohmann::json meta = nlohmann::json::parse(in);
    CHECK(meta["scene"] == r.scene);
    CHECK(meta["seed"] == 21);
    CHECK(meta["sigma_grid"].size() == 4);
    for (double c : meta["offset"]) CHECK(std::abs(c) <= 0.08);

    // The stored LR is the recorded degradation applied to the stored HR.
    Degradation d;
    d.gain = meta["gain"];
    d.offset = meta["offset"];
    d.grid = 4;
    d.sigma.clear();
    for (const auto& row : meta["sigma_grid"]) {
      for (double s : row) d.sigma.push_back(s);
    }
    const Image hr_img = imaging::read_image(loaded.hr_file(r));
    const Image expect = degrade(hr_img, d, lr.height, lr.width);
    const Image got = imaging::read_image(loaded.lr_file(r));
    double worst = 0;
    for (std::size_t i = 0; i < got.samples().size(); ++i) {
      worst = std::max(worst, double(std::abs(got.samples()[i] - float(imaging::quantize(expect.samples()[i]) / 255.0))));
    }
    CHECK(worst == 0.0);
  }

  synth_generate(root / "src", cfg, scales, root / "b");
  for (const PairRecord& r : m.records) {
    CHECK(slurp(root / "a" / r.lr_path) == slurp(root / "b" / r.lr_path));
    CHECK(slurp(root / "a" / r.scene / format_scale(r.scale) / "meta.json") ==
          slurp(root / "b" / r.scene / format_scale(r.scale) / "meta.json"));
  }
  CHECK(slurp(root / "a" / "manifest.csv") == slurp(root / "b" / "manifest.csv"));

  cfg.seed = 22;
  synth_generate(root / "src", cfg, scales, root / "c");
  CHECK(slurp(root / "a" / m.records[0].lr_path) != slurp(root / "c" / m.records[0].lr_path));
}

TEST_CASE("synth_generate: pure bicubic data has no deviation from bicubic degradation") {
  const fs::path root = fresh_dir("pure");
  write_procedural_sources(root / "src", SourceKind::kTexture, 2, 32, 32, 4);
  const Manifest m = synth_generate(root / "src", degenerate_config(), {2.0}, root / "out");
  for (const PairRecord& r : m.records) {
    const Image hr = imaging::read_image(m.hr_file(r)), lr = imaging::read_image(m.lr_file(r));
    const Image expect = imaging::bicubic_resize(hr, {lr.height(), lr.width()});
    // Only 8-bit quantization separates the stored LR from the bicubic one.
    CHECK(max_diff(lr, expect) <= 0.5 / 255 + 1e-6);
  }
}

TEST_CASE("synth_generate: errors") {
  const fs::path root = fresh_dir("synth_err");
  CHECK_THROWS_AS(synth_generate(root / "nothing", SyntheticConfig{}, {2.0}, root / "o"), DataError);
  fs::create_directories(root / "empty");
  CHECK_THROWS_AS(synth_generate(root / "empty", SyntheticConfig{}, {2.0}, root / "o"), DataError);
  write_procedural_sources(root / "src", SourceKind::kSmooth, 1, 8, 8, 1);
  write_text(root / "file", "x");
  CHECK_THROWS_AS(synth_generate(root / "src", SyntheticConfig{}, {2.0}, root / "file" / "out"), DataError);
  CHECK_THROWS_AS(synth_generate(root / "src", SyntheticConfig{}, {}, root / "o"), UsageError);
  CHECK_THROWS_AS(synth_generate(root / "src", SyntheticConfig{}, {9.0}, root / "o"), UsageError);
}

TEST_CASE("procedural sources") {
  for (SourceKind kind : {SourceKind::kSmooth, SourceKind::kTexture, SourceKind::kStationary}) {
    const Image a = procedural_image(kind, 40, 50, 3), b = procedural_image(kind, 40, 50, 3);
    CHECK(a == b);
    CHECK_FALSE(a == procedural_image(kind, 40, 50, 4));
    for (float v : a.samples()) CHECK((v >= 0.0f && v <= 1.0f));
  }
  const Image st = procedural_image(SourceKind::kStationary, 64, 64, 8, 10);
  for (std::size_t c = 0; c < 3; ++c) {
    double mean = 0;
    for (std::size_t y = 0; y < 64; ++y) {
      for (std::size_t x = 0; x < 64; ++x) mean += st.at(y, x, c);
    }
    CHECK(std::abs(mean / 4096 - 0.5) < 1e-6);
  }
  // Smooth sources survive a x2 bicubic round trip almost unchanged.
  const Image sm = procedural_image(SourceKind::kSmooth, 64, 64, 5);
  const Image back = imaging::bicubic_resize(imaging::bicubic_resize(sm, {32, 32}), {64, 64});
  double err = 0;
  for (std::size_t i = 0; i < sm.samples().size(); ++i) err += std::abs(sm.samples()[i] - back.samples()[i]);
  CHECK(err / double(sm.samples().size()) < 2e-3);
}
