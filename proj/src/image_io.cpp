#include "diip/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace diip {

namespace {

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace

void write_dimg(std::ostream& os, const Image& img) {
  os << "DIIPIMG 1 " << img.height() << ' ' << img.width() << ' ' << img.channels() << '\n';
  std::vector<char> buf(img.size() * 4);
  for (std::size_t i = 0; i < img.size(); ++i) {
    const std::uint32_t bits = to_le(std::bit_cast<std::uint32_t>(static_cast<float>(img[i])));
    std::memcpy(buf.data() + 4 * i, &bits, 4);
  }
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw Error("failed writing DIIP-IMG payload");
}

Image read_dimg(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error("DIIP-IMG: missing header");
  std::istringstream hs(line);
  std::string magic;
  int version = 0, h = 0, w = 0, c = 0;
  hs >> magic >> version >> h >> w >> c;
  if (!hs || magic != "DIIPIMG") throw Error("DIIP-IMG: bad magic");
  if (version != 1) throw Error("DIIP-IMG: unsupported version " + std::to_string(version));
  if (h <= 0 || w <= 0 || (c != 1 && c != 3)) throw Error("DIIP-IMG: bad dimensions");
  const std::size_t n = static_cast<std::size_t>(h) * w * c;
  std::vector<char> buf(n * 4);
  is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (static_cast<std::size_t>(is.gcount()) != buf.size()) throw Error("DIIP-IMG: truncated payload");
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, buf.data() + 4 * i, 4);
    data[i] = std::bit_cast<float>(to_le(bits));
  }
  Image img(h, w, c, std::move(data));
  if (!img.all_finite()) throw Error("DIIP-IMG: non-finite sample");
  return img;
}

void save_dimg(const std::filesystem::path& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  write_dimg(os, img);
}

Image load_dimg(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path.string() + "'");
  try {
    return read_dimg(is);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

void save_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) throw Error("PNG export needs 1 or 3 channels");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) throw Error("cannot open '" + path.string() + "' for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed");
  }
  std::vector<png_byte> row(static_cast<std::size_t>(img.width()) * img.channels());
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng error writing '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        const double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
        row[static_cast<std::size_t>(x) * img.channels() + c] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image load_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) throw Error("cannot open '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("libpng error reading '" + path.string() + "'");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int c = png_get_channels(png, info);
  if (c != 1 && c != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("unsupported PNG channel layout in '" + path.string() + "'");
  }
  std::vector<png_byte> row(static_cast<std::size_t>(w) * c);
  Image img(h, w, c);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < c; ++ch)
        img.at(y, x, ch) = row[static_cast<std::size_t>(x) * c + ch] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

}  // namespace diip
