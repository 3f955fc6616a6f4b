// Checkpoint files.
//
// Layout, all integers little-endian:
//   "DDIR"                      4 bytes
//   version                     u32 (currently 1)
//   config echo                 u64 byte count, UTF-8 text
//   tensor count                u64
//   per tensor                  u32 name length, UTF-8 name, u32 rank,
//                               rank x u64 extents, float32 elements
//   CRC-32 of all bytes above   u32 (zlib polynomial)
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ddir/cli/config.h"
#include "ddir/model/ddir.h"

namespace ddir::cli {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string config_echo;
  numerics::ParamStore<float> params;
};

void save_checkpoint(const std::filesystem::path& path, const std::string& config_echo,
                     const numerics::ParamStore<float>& params);

// Throws DataError on a missing file, bad magic, CRC mismatch (which covers
// truncation) or a version newer than kCheckpointVersion. Nothing is
// returned unless the whole file verifies.
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Model described by the checkpoint's config echo, holding its parameters.
model::DdirModel<float> load_model(const std::filesystem::path& path);

}  // namespace ddir::cli
