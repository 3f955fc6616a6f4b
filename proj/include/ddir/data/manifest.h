// LR/HR pair listings.
//
// A manifest is a UTF-8 CSV file with columns scene,scale,lr_path,hr_path.
// The header line is optional, blank lines are skipped, and image paths are
// relative to the directory holding the manifest unless absolute.
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace ddir::data {

struct PairRecord {
  std::string scene;
  double scale = 0;
  std::string lr_path;  // as written in the file
  std::string hr_path;
};

enum class Split { kTrain, kTest };

struct Manifest {
  std::filesystem::path root;  // directory the image paths are relative to
  Split split = Split::kTest;
  std::vector<PairRecord> records;

  std::filesystem::path resolve(const std::string& path) const;
  std::filesystem::path lr_file(const PairRecord& r) const { return resolve(r.lr_path); }
  std::filesystem::path hr_file(const PairRecord& r) const { return resolve(r.hr_path); }

  // Distinct scales in first-appearance order.
  std::vector<double> scales() const;
};

// Parses and validates a manifest: every line must have four fields and a
// positive scale, (scene, scale) pairs must be unique, and each HR image must
// measure round(scale * LR) within one pixel per axis. Image headers are read
// for the size check. When min_lr_extent > 0, LR images smaller than that in
// either axis are rejected. Errors are DataError with the line number or pair.
Manifest load_manifest(const std::filesystem::path& path, Split split = Split::kTest,
                       std::size_t min_lr_extent = 0);

// Writes the header and one line per record; scales use the shortest text
// that parses back to the same value.
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

// Shortest round-trip text for a scale, always with a decimal point ("2.0").
std::string format_scale(double scale);

}  // namespace ddir::data
