#include "ddir/cli/checkpoint.h"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

#include "ddir/common/error.h"

namespace ddir::cli {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class Writer {
 public:
  template <typename U>
  void put(U v) {
    unsigned char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(U));
    bytes_.insert(bytes_.end(), b, b + sizeof(U));
  }
  void put_text(const std::string& s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<unsigned char>& bytes() { return bytes_; }

 private:
  std::vector<unsigned char> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& bytes, std::size_t end, const std::string& path)
      : bytes_(bytes), end_(end), path_(path) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    unsigned char b[sizeof(U)];
    std::memcpy(b, bytes_.data() + pos_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(U));
    pos_ += sizeof(U);
    U v;
    std::memcpy(&v, b, sizeof(U));
    return v;
  }
  std::string get_text(std::uint64_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<long>(pos_), bytes_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(std::uint64_t n) const {
    if (n > end_ - pos_) throw DataError("checkpoint " + path_ + ": malformed tensor table");
  }
  const std::vector<unsigned char>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
  std::string path_;
};

std::uint32_t crc_of(const unsigned char* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::string& config_echo,
                     const numerics::ParamStore<float>& params) {
  Writer w;
  w.put_text("DDIR");
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(config_echo.size());
  w.put_text(config_echo);
  const std::vector<std::string> names = params.names();
  w.put<std::uint64_t>(names.size());
  for (const std::string& name : names) {
    const numerics::Tensor<float>& t = params.value(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_text(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.shape().size()));
    for (std::size_t e : t.shape()) w.put<std::uint64_t>(e);
    for (float v : t.data()) w.put<float>(v);
  }
  w.put<std::uint32_t>(crc_of(w.bytes().data(), w.bytes().size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(w.bytes().data()), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw DataError("cannot write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + name);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "DDIR", 4) != 0) {
    throw DataError("checkpoint " + name + ": not a DDIR checkpoint");
  }
  if (bytes.size() < 12) throw DataError("checkpoint " + name + ": CRC mismatch (file truncated)");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored = 0;
  for (std::size_t k = 0; k < 4; ++k) stored |= std::uint32_t{bytes[body + k]} << (8 * k);
  if (stored != crc_of(bytes.data(), body)) throw DataError("checkpoint " + name + ": CRC mismatch");

  Reader r(bytes, body, name);
  r.get_text(4);
  const std::uint32_t version = r.get<std::uint32_t>();
  if (version > kCheckpointVersion) {
    throw DataError("checkpoint " + name + ": format version " + std::to_string(version) +
                    " is newer than supported version " + std::to_string(kCheckpointVersion));
  }
  Checkpoint ck;
  ck.config_echo = r.get_text(r.get<std::uint64_t>());
  const std::uint64_t count = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string tensor_name = r.get_text(r.get<std::uint32_t>());
    const std::uint32_t rank = r.get<std::uint32_t>();
    numerics::Shape shape;
    for (std::uint32_t k = 0; k < rank; ++k) shape.push_back(static_cast<std::size_t>(r.get<std::uint64_t>()));
    numerics::Tensor<float> t(shape);
    for (float& v : t.data()) v = r.get<float>();
    if (ck.params.contains(tensor_name)) throw DataError("checkpoint " + name + ": duplicate tensor " + tensor_name);
    ck.params.add(tensor_name, std::move(t));
  }
  if (!r.done()) throw DataError("checkpoint " + name + ": trailing bytes after the tensor table");
  return ck;
}

model::DdirModel<float> load_model(const std::filesystem::path& path) {
  Checkpoint ck = load_checkpoint(path);
  const RunConfig cfg = parse_config(ck.config_echo, {}, path.string() + " (config echo)");
  return model::DdirModel<float>(cfg.model, std::move(ck.params));
}

}  // namespace ddir::cli
