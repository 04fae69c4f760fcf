#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace diip {

/// Raised for every contract violation in the library (shape mismatch,
/// parameter out of range, malformed file, ...).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced NaN/Inf (as opposed to bad input).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// H x W x C raster of doubles, row-major and channel-interleaved.
/// Nominal range is [0, 1] but nothing clamps; latents live in this type too.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);
  Image(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool same_shape(const Image& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  double& at(int y, int x, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double at(int y, int x, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  bool all_finite() const;

  // Elementwise arithmetic; every op returns a fresh image.
  Image operator+(const Image& o) const;
  Image operator-(const Image& o) const;
  Image operator*(double s) const;
  Image& operator+=(const Image& o);
  Image& operator-=(const Image& o);
  Image& operator*=(double s);
  bool operator==(const Image& o) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// a*x + b*y for same-shaped images.
Image axpby(double a, const Image& x, double b, const Image& y);
double dot(const Image& a, const Image& b);
double squared_norm(const Image& a);
double sum_squared_diff(const Image& a, const Image& b);
void require_same_shape(const Image& a, const Image& b, const char* what);

/// Square odd-sized correlation kernel.
struct Kernel2D {
  int size = 1;
  std::vector<double> weights{1.0};

  double at(int dy, int dx) const { return weights[static_cast<std::size_t>(dy) * size + dx]; }
  double sum() const;
};

enum class Border { Reflect, Replicate, Zero };

Border parse_border(const std::string& name);

Kernel2D identity_kernel();
Kernel2D box_kernel(int size);
/// Truncated, normalized Gaussian of the given odd size.
Kernel2D gaussian_kernel(int size, double sigma);
/// The 3x3 stencil [[0,1,0],[1,-4,1],[0,1,0]].
Kernel2D laplacian_kernel();

/// Per-channel 2D correlation; output has the input's shape.
Image convolve2d(const Image& img, const Kernel2D& k, Border border = Border::Reflect);

/// 0.299 R + 0.587 G + 0.114 B for 3-channel input, a copy otherwise.
Image luminance(const Image& img);

/// Variance of the Laplacian response over interior pixels (luminance for RGB).
double laplacian_variance(const Image& img);

inline constexpr double kPsnrCap = 99.0;

double mse(const Image& a, const Image& b);
double psnr(const Image& a, const Image& b, double peak = 1.0, double cap = kPsnrCap);

/// Mean SSIM over 11x11 Gaussian (sigma 1.5) windows on luminance,
/// K1 = 0.01, K2 = 0.03, dynamic range 1.
double ssim(const Image& a, const Image& b);

enum class Resample { Down, Up };

/// Down: stride subsampling (blur first if needed). Up: nearest-neighbour replication.
Image resample(const Image& img, int factor, Resample direction);

Image clamp01(const Image& img);

}  // namespace diip
