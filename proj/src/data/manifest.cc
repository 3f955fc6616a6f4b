#include "ddir/data/manifest.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "ddir/common/error.h"
#include "ddir/imaging/image_io.h"

namespace ddir::data {
namespace {

constexpr const char* kHeader = "scene,scale,lr_path,hr_path";

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void line_error(const std::filesystem::path& path, std::size_t line,
                             const std::string& why) {
  throw DataError(path.string() + ":" + std::to_string(line) + ": " + why);
}

double parse_scale(const std::string& text, const std::filesystem::path& path, std::size_t line) {
  double v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v) || v <= 0) {
    line_error(path, line, "scale '" + text + "' is not a positive number");
  }
  return v;
}

std::string pair_name(const PairRecord& r) {
  return "pair (" + r.scene + ", " + format_scale(r.scale) + ")";
}

void check_dims(const Manifest& m, const PairRecord& r, std::size_t min_lr) {
  const imaging::ImageDims lr = imaging::read_image_dims(m.lr_file(r));
  const imaging::ImageDims hr = imaging::read_image_dims(m.hr_file(r));
  const auto expected = [&](std::size_t n) {
    return static_cast<long long>(std::llround(r.scale * static_cast<double>(n)));
  };
  const long long eh = expected(lr.height), ew = expected(lr.width);
  if (std::llabs(static_cast<long long>(hr.height) - eh) > 1 ||
      std::llabs(static_cast<long long>(hr.width) - ew) > 1) {
    throw DataError(pair_name(r) + ": HR is " + std::to_string(hr.height) + "x" +
                    std::to_string(hr.width) + " but LR " + std::to_string(lr.height) + "x" +
                    std::to_string(lr.width) + " at this scale expects about " + std::to_string(eh) +
                    "x" + std::to_string(ew));
  }
  if (lr.height < min_lr || lr.width < min_lr) {
    throw DataError(pair_name(r) + ": LR " + std::to_string(lr.height) + "x" +
                    std::to_string(lr.width) + " is smaller than the " + std::to_string(min_lr) +
                    "-pixel training patch");
  }
}

}  // namespace

std::string format_scale(double scale) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, scale);
  std::string s(buf, end);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::filesystem::path Manifest::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : root / p;
}

std::vector<double> Manifest::scales() const {
  std::vector<double> out;
  for (const PairRecord& r : records) {
    bool seen = false;
    for (double s : out) seen = seen || s == r.scale;
    if (!seen) out.push_back(r.scale);
  }
  return out;
}

Manifest load_manifest(const std::filesystem::path& path, Split split, std::size_t min_lr_extent) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  Manifest m;
  m.root = path.parent_path();
  m.split = split;
  std::set<std::pair<std::string, double>> seen;
  std::string line;
  std::size_t number = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    if (first && trim(line) == kHeader) {
      first = false;
      continue;
    }
    first = false;
    std::vector<std::string> f = split_fields(line);
    if (f.size() != 4) {
      line_error(path, number, "expected 4 comma-separated fields, found " + std::to_string(f.size()));
    }
    for (auto& x : f) x = trim(x);
    if (f[0].empty() || f[2].empty() || f[3].empty()) line_error(path, number, "empty field");
    PairRecord r{f[0], parse_scale(f[1], path, number), f[2], f[3]};
    if (!seen.emplace(r.scene, r.scale).second) {
      line_error(path, number, "duplicate " + pair_name(r));
    }
    m.records.push_back(std::move(r));
  }
  for (const PairRecord& r : m.records) check_dims(m, r, min_lr_extent);
  return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << kHeader << "\n";
  for (const PairRecord& r : manifest.records) {
    for (const std::string* field : {&r.scene, &r.lr_path, &r.hr_path}) {
      if (field->find_first_of(",\n") != std::string::npos) {
        throw UsageError("manifest fields cannot contain commas or newlines: " + *field);
      }
    }
    out << r.scene << "," << format_scale(r.scale) << "," << r.lr_path << "," << r.hr_path << "\n";
  }
  if (!out) throw DataError("cannot write manifest " + path.string());
}

}  // namespace ddir::data
