#include "ddir/imaging/image_io.h"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace ddir::imaging {
namespace {

enum class Format { kPng, kPpm };

std::string lower(std::string s) {
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

Format format_of(const std::filesystem::path& path) {
  const std::string ext = lower(path.extension().string());
  if (ext == ".png") return Format::kPng;
  if (ext == ".ppm" || ext == ".pnm") return Format::kPpm;
  throw DataError("unsupported image extension: " + path.string());
}

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& why) {
  throw DataError("cannot read image " + path.string() + ": " + why);
}

// Netpbm header token reader that skips whitespace and '#' comments.
class PnmReader {
 public:
  PnmReader(std::istream& in, const std::filesystem::path& path) : in_(in), path_(path) {}

  std::string token() {
    std::string t;
    int ch;
    while ((ch = in_.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in_.get()) != EOF && ch != '\n') {}
        continue;
      }
      if (std::isspace(ch)) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(static_cast<char>(ch));
    }
    if (t.empty()) fail(path_, "truncated header");
    return t;
  }

  std::size_t number() {
    const std::string t = token();
    std::size_t pos = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(t, &pos);
    } catch (const std::exception&) {
      fail(path_, "bad number '" + t + "'");
    }
    if (pos != t.size()) fail(path_, "bad number '" + t + "'");
    return v;
  }

 private:
  std::istream& in_;
  const std::filesystem::path& path_;
};

struct PnmHeader {
  bool ascii;
  std::size_t width, height, maxval;
};

PnmHeader read_pnm_header(std::istream& in, const std::filesystem::path& path) {
  PnmReader r(in, path);
  const std::string magic = r.token();
  if (magic != "P3" && magic != "P6") fail(path, "not a P3/P6 file");
  PnmHeader h{magic == "P3", 0, 0, 0};
  h.width = r.number();
  h.height = r.number();
  h.maxval = r.number();
  if (h.width == 0 || h.height == 0) fail(path, "zero extent");
  if (h.maxval == 0 || h.maxval > 255) fail(path, "only 8-bit maxval is supported");
  return h;
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  const PnmHeader h = read_pnm_header(in, path);
  Image img(h.height, h.width);
  auto s = img.samples();
  const double scale = 1.0 / static_cast<double>(h.maxval);
  if (h.ascii) {
    PnmReader r(in, path);
    for (float& v : s) {
      const std::size_t n = r.number();
      if (n > h.maxval) fail(path, "sample exceeds maxval");
      v = static_cast<float>(static_cast<double>(n) * scale);
    }
  } else {
    std::vector<unsigned char> buf(s.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) fail(path, "truncated pixel data");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (buf[i] > h.maxval) fail(path, "sample exceeds maxval");
      s[i] = static_cast<float>(static_cast<double>(buf[i]) * scale);
    }
  }
  return img;
}

Image read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) fail(path, png.message);
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    const std::string msg = png.message;
    png_image_free(&png);
    fail(path, msg);
  }
  Image img(png.height, png.width);
  auto s = img.samples();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<float>(buf[i] / 255.0);
  return img;
}

std::vector<unsigned char> to_bytes(const Image& img) {
  const auto s = img.samples();
  std::vector<unsigned char> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = quantize(s[i]);
  return out;
}

}  // namespace

std::uint8_t quantize(float v) {
  const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

Image read_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(path, "no such file");
  return format_of(path) == Format::kPng ? read_png(path) : read_ppm(path);
}

ImageDims read_image_dims(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(path, "no such file");
  if (format_of(path) == Format::kPng) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str())) fail(path, png.message);
    ImageDims d{png.height, png.width};
    png_image_free(&png);
    return d;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  const PnmHeader h = read_pnm_header(in, path);
  return {h.height, h.width};
}

void write_image(const Image& img, const std::filesystem::path& path) {
  const std::vector<unsigned char> bytes = to_bytes(img);
  if (format_of(path) == Format::kPng) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(img.width());
    png.height = static_cast<png_uint_32>(img.height());
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
      throw DataError("cannot write image " + path.string() + ": " + png.message);
    }
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write image " + path.string());
  out << "P6\n" << img.width() << " " << img.height() << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("cannot write image " + path.string());
}

}  // namespace ddir::imaging
