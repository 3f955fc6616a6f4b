// 8-bit PNG and PPM (P3/P6) reading and writing. The format follows the file
// extension (.png, .ppm, .pnm); writes use P6 for .ppm.
#pragma once

#include <cstdint>
#include <filesystem>

#include "ddir/imaging/image.h"

namespace ddir::imaging {

struct ImageDims {
  std::size_t height;
  std::size_t width;
};

// Throws DataError naming the path when the file is missing or corrupt.
Image read_image(const std::filesystem::path& path);

// Reads only the header.
ImageDims read_image_dims(const std::filesystem::path& path);

// Samples are clamped to [0, 1] and rounded to the nearest of 256 levels.
void write_image(const Image& img, const std::filesystem::path& path);

// Byte value written for a sample.
std::uint8_t quantize(float v);

}  // namespace ddir::imaging
