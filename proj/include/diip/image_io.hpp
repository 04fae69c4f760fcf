#pragma once

#include <filesystem>
#include <iosfwd>

#include "diip/image.hpp"

namespace diip {

// DIIP-IMG/1: "DIIPIMG 1 <height> <width> <channels>\n" followed by
// little-endian float32 samples, row-major, channel-interleaved.
void write_dimg(std::ostream& os, const Image& img);
Image read_dimg(std::istream& is);
void save_dimg(const std::filesystem::path& path, const Image& img);
Image load_dimg(const std::filesystem::path& path);

/// 8-bit grayscale or RGB PNG; values clamped to [0, 1] and scaled by 255.
void save_png(const std::filesystem::path& path, const Image& img);
Image load_png(const std::filesystem::path& path);

}  // namespace diip
