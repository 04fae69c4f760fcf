#include "diip/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace diip {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw Error("image dimensions must be positive");
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image::Image(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw Error("image dimensions must be positive");
  }
  if (data_.size() != static_cast<std::size_t>(height) * width * channels) {
    throw Error("image data length does not match height*width*channels");
  }
}

bool Image::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    throw Error(std::string(what) + ": shape mismatch (" + std::to_string(a.height()) + "x" +
                std::to_string(a.width()) + "x" + std::to_string(a.channels()) + " vs " +
                std::to_string(b.height()) + "x" + std::to_string(b.width()) + "x" +
                std::to_string(b.channels()) + ")");
  }
}

Image Image::operator+(const Image& o) const {
  Image r = *this;
  r += o;
  return r;
}

Image Image::operator-(const Image& o) const {
  Image r = *this;
  r -= o;
  return r;
}

Image Image::operator*(double s) const {
  Image r = *this;
  r *= s;
  return r;
}

Image& Image::operator+=(const Image& o) {
  require_same_shape(*this, o, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Image& Image::operator-=(const Image& o) {
  require_same_shape(*this, o, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Image& Image::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Image axpby(double a, const Image& x, double b, const Image& y) {
  require_same_shape(x, y, "axpby");
  Image r(x.height(), x.width(), x.channels());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = a * x[i] + b * y[i];
  return r;
}

double dot(const Image& a, const Image& b) {
  require_same_shape(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_norm(const Image& a) { return dot(a, a); }

double sum_squared_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "sum_squared_diff");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double Kernel2D::sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

Border parse_border(const std::string& name) {
  if (name == "reflect") return Border::Reflect;
  if (name == "replicate") return Border::Replicate;
  if (name == "zero") return Border::Zero;
  throw Error("unknown border mode '" + name + "'");
}

Kernel2D identity_kernel() { return Kernel2D{}; }

Kernel2D box_kernel(int size) {
  if (size < 1 || size % 2 == 0) throw Error("box kernel size must be odd and >= 1");
  const double w = 1.0 / (static_cast<double>(size) * size);
  return Kernel2D{size, std::vector<double>(static_cast<std::size_t>(size) * size, w)};
}

Kernel2D gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw Error("gaussian kernel size must be odd and >= 1");
  if (!(sigma > 0.0)) throw Error("gaussian kernel sigma must be positive");
  Kernel2D k{size, std::vector<double>(static_cast<std::size_t>(size) * size)};
  const int r = size / 2;
  double total = 0.0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      k.weights[static_cast<std::size_t>(dy + r) * size + (dx + r)] = w;
      total += w;
    }
  }
  for (double& w : k.weights) w /= total;
  return k;
}

Kernel2D laplacian_kernel() { return Kernel2D{3, {0, 1, 0, 1, -4, 1, 0, 1, 0}}; }

namespace {

// Maps an out-of-range coordinate back into [0, n). Returns -1 for zero padding.
int border_index(int i, int n, Border border) {
  if (i >= 0 && i < n) return i;
  switch (border) {
    case Border::Zero:
      return -1;
    case Border::Replicate:
      return std::clamp(i, 0, n - 1);
    case Border::Reflect:
      if (n == 1) return 0;
      while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * (n - 1) - i;
      }
      return i;
  }
  return -1;
}

}  // namespace

Image convolve2d(const Image& img, const Kernel2D& k, Border border) {
  if (k.size < 1 || k.size % 2 == 0 ||
      k.weights.size() != static_cast<std::size_t>(k.size) * k.size) {
    throw Error("kernel must be odd-sized with size*size weights");
  }
  if (k.size > img.height() || k.size > img.width()) throw Error("kernel exceeds image extent");
  const int h = img.height(), w = img.width(), c = img.channels(), r = k.size / 2;
  Image out(h, w, c);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          const int sy = border_index(y + dy, h, border);
          if (sy < 0) continue;
          for (int dx = -r; dx <= r; ++dx) {
            const int sx = border_index(x + dx, w, border);
            if (sx < 0) continue;
            acc += k.at(dy + r, dx + r) * img.at(sy, sx, ch);
          }
        }
        out.at(y, x, ch) = acc;
      }
    }
  }
  return out;
}

Image luminance(const Image& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw Error("luminance requires 1 or 3 channels");
  Image out(img.height(), img.width(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.at(y, x) = 0.299 * img.at(y, x, 0) + 0.587 * img.at(y, x, 1) + 0.114 * img.at(y, x, 2);
    }
  }
  return out;
}

double laplacian_variance(const Image& img) {
  if (img.height() < 3 || img.width() < 3) throw Error("image too small for Laplacian");
  const Image lum = luminance(img);
  const int h = lum.height(), w = lum.width();
  const std::size_t n = static_cast<std::size_t>(h - 2) * (w - 2);
  std::vector<double> resp;
  resp.reserve(n);
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      resp.push_back(lum.at(y - 1, x) + lum.at(y + 1, x) + lum.at(y, x - 1) + lum.at(y, x + 1) -
                     4.0 * lum.at(y, x));
    }
  }
  double mean = 0.0;
  for (double v : resp) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : resp) var += (v - mean) * (v - mean);
  return var / static_cast<double>(n);
}

double mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "mse");
  return sum_squared_diff(a, b) / static_cast<double>(a.size());
}

double psnr(const Image& a, const Image& b, double peak, double cap) {
  if (!(peak > 0.0)) throw Error("psnr peak must be positive");
  const double m = mse(a, b);
  if (m == 0.0) return cap;
  return std::min(cap, 10.0 * std::log10(peak * peak / m));
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  constexpr int kWin = 11;
  if (a.height() < kWin || a.width() < kWin) throw Error("image smaller than SSIM window");
  const Image la = luminance(a), lb = luminance(b);
  const Kernel2D g = gaussian_kernel(kWin, 1.5);
  constexpr double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  const int oh = a.height() - kWin + 1, ow = a.width() - kWin + 1;
  double total = 0.0;
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (int dy = 0; dy < kWin; ++dy) {
        for (int dx = 0; dx < kWin; ++dx) {
          const double wgt = g.at(dy, dx);
          const double u = la.at(y + dy, x + dx), v = lb.at(y + dy, x + dx);
          mx += wgt * u;
          my += wgt * v;
          sxx += wgt * u * u;
          syy += wgt * v * v;
          sxy += wgt * u * v;
        }
      }
      const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
    }
  }
  return total / (static_cast<double>(oh) * ow);
}

Image resample(const Image& img, int factor, Resample direction) {
  if (factor < 1) throw Error("resample factor must be a positive integer");
  if (factor == 1) return img;
  const int c = img.channels();
  if (direction == Resample::Down) {
    if (img.height() % factor != 0 || img.width() % factor != 0) {
      throw Error("image dimensions not divisible by resample factor");
    }
    Image out(img.height() / factor, img.width() / factor, c);
    for (int y = 0; y < out.height(); ++y)
      for (int x = 0; x < out.width(); ++x)
        for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = img.at(y * factor, x * factor, ch);
    return out;
  }
  Image out(img.height() * factor, img.width() * factor, c);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      for (int ch = 0; ch < c; ++ch) out.at(y, x, ch) = img.at(y / factor, x / factor, ch);
  return out;
}

Image clamp01(const Image& img) {
  Image out = img;
  for (double& v : out.storage()) v = std::clamp(v, 0.0, 1.0);
  return out;
}

}  // namespace diip
