#pragma once

#include <cstddef>
#include <vector>

#include "ddir/imaging/image.h"

namespace ddir::imaging {

// BT.601 studio-swing luma for RGB in [0, 1]:
// Y = (16 + 65.481 R + 128.553 G + 24.966 B) / 255.
double luma_bt601(double r, double g, double b);

// Luminance plane, H x W row-major.
std::vector<double> rgb_to_y(const Image& img);

// PSNR on the Y channel after discarding a `shave`-pixel border, with signal
// peak 1. Returns +infinity when the shaved planes are identical. Throws
// UsageError on size mismatch or a shave that leaves no pixels.
double psnr_y(const Image& a, const Image& b, std::size_t shave);

}  // namespace ddir::imaging
