#include "diip/datasets.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "diip/rng.hpp"

namespace diip {

namespace {

std::string shape_str(ImageShape s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

void check_shape(ImageShape s) {
  if (s.height <= 0 || s.width <= 0 || s.channels <= 0) throw Error("dataset: invalid shape");
}

}  // namespace

GmmDataset::GmmDataset(GMMModel gmm, std::uint64_t seed) : gmm_(std::move(gmm)), seed_(seed) {
  gmm_.validate();
}

ImageShape GmmDataset::shape() const { return shape_of(gmm_.means.front()); }

Image GmmDataset::sample(std::uint64_t index) const {
  Philox rng(seed_, index);
  double u = rng.uniform();
  std::size_t k = 0;
  while (k + 1 < gmm_.size() && u > gmm_.weights[k]) u -= gmm_.weights[k++];
  const Image& mu = gmm_.means[k];
  const ImageShape s = shape();
  return mu + normal_image(s.height, s.width, s.channels, rng, std::sqrt(gmm_.variances[k]));
}

std::string GmmDataset::tag() const {
  return "gmm:" + shape_str(shape()) + ":k=" + std::to_string(gmm_.size());
}

ShapesDataset::ShapesDataset(ImageShape shape, std::uint64_t seed, int max_shapes, double jitter,
                             bool high_contrast)
    : shape_(shape), seed_(seed), max_shapes_(max_shapes), jitter_(jitter), high_contrast_(high_contrast) {
  check_shape(shape);
  if (max_shapes < 1) throw Error("shapes dataset: max_shapes must be >= 1");
  if (!(jitter >= 0 && jitter <= 1)) throw Error("shapes dataset: jitter must lie in [0, 1]");
}

Image ShapesDataset::sample(std::uint64_t index) const {
  Philox rng(seed_, index);
  const int h = shape_.height, w = shape_.width, ch = shape_.channels;
  const double extent = std::min(h, w);
  Image img(h, w, ch);
  for (int c = 0; c < ch; ++c) {
    const double bg = 0.1 + (high_contrast_ ? 0.2 : 0.4) * rng.uniform();
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(y, x, c) = bg;
  }
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_shapes_)));
  for (int s = 0; s < n; ++s) {
    double value[3];
    for (int c = 0; c < ch; ++c) {
      value[std::min(c, 2)] = high_contrast_ ? 0.7 + 0.2 * rng.uniform() : 0.3 + 0.65 * rng.uniform();
    }
    const double cx = 0.5 * w + (rng.uniform() - 0.5) * w * jitter_;
    const double cy = 0.5 * h + (rng.uniform() - 0.5) * h * jitter_;
    const double r = extent * (0.12 + 0.2 * rng.uniform());
    const bool disc = rng.uniform() < 0.5;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
        const bool inside = disc ? dx * dx + dy * dy < r * r
                                 : std::abs(dx) < r && std::abs(dy) < 0.8 * r;
        if (!inside) continue;
        for (int c = 0; c < ch; ++c) img.at(y, x, c) = value[std::min(c, 2)];
      }
    }
  }
  return img;
}

std::string ShapesDataset::tag() const {
  char j[32];
  std::snprintf(j, sizeof j, "%g", jitter_);
  return "shapes:" + shape_str(shape_) + ":max=" + std::to_string(max_shapes_) + ":jitter=" + j + (high_contrast_ ? ":contrast=high" : "");
}

StripesDataset::StripesDataset(ImageShape shape, std::uint64_t seed) : shape_(shape), seed_(seed) {
  check_shape(shape);
}

Image StripesDataset::sample(std::uint64_t index) const {
  Philox rng(seed_, index);
  const double theta = std::numbers::pi * rng.uniform();
  const double period = 4.0 + 6.0 * rng.uniform();
  const double phase = period * rng.uniform();
  const double lo = 0.1 + 0.3 * rng.uniform(), hi = 0.6 + 0.3 * rng.uniform();
  const double cx = std::cos(theta), sy = std::sin(theta);
  Image img(shape_.height, shape_.width, shape_.channels);
  for (int y = 0; y < shape_.height; ++y) {
    for (int x = 0; x < shape_.width; ++x) {
      const double u = std::fmod(x * cx + y * sy + phase + 1000.0 * period, period);
      const double v = u < 0.5 * period ? hi : lo;
      for (int c = 0; c < shape_.channels; ++c) img.at(y, x, c) = v;
    }
  }
  return img;
}

std::string StripesDataset::tag() const { return "stripes:" + shape_str(shape_); }

BlobsDataset::BlobsDataset(ImageShape shape, std::uint64_t seed) : shape_(shape), seed_(seed) {
  check_shape(shape);
}

Image BlobsDataset::sample(std::uint64_t index) const {
  Philox rng(seed_, index);
  const int h = shape_.height, w = shape_.width;
  Image img(h, w, shape_.channels, 0.2);
  const int n = 2 + static_cast<int>(rng.below(4));
  for (int b = 0; b < n; ++b) {
    const double cx = rng.uniform() * w, cy = rng.uniform() * h;
    const double s = std::min(h, w) * (0.08 + 0.15 * rng.uniform());
    const double a = 0.2 + 0.4 * rng.uniform();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double d2 = (x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy);
        const double v = a * std::exp(-d2 / (2 * s * s));
        for (int c = 0; c < shape_.channels; ++c) img.at(y, x, c) += v;
      }
    }
  }
  return clamp01(img);
}

std::string BlobsDataset::tag() const { return "blobs:" + shape_str(shape_); }

GMMModel make_random_gmm(ImageShape shape, int k, double sigma_d, std::uint64_t seed, double lo,
                         double hi) {
  check_shape(shape);
  if (k < 1) throw Error("gmm: need at least one component");
  if (!(sigma_d > 0)) throw Error("gmm: sigma must be positive");
  GMMModel g;
  Philox rng(seed, 0x6d6d);
  for (int i = 0; i < k; ++i) {
    Image mu(shape.height, shape.width, shape.channels);
    for (double& v : mu.storage()) v = lo + (hi - lo) * rng.uniform();
    g.means.push_back(std::move(mu));
    g.variances.push_back(sigma_d * sigma_d);
    g.weights.push_back(1.0 / k);
  }
  return g;
}

std::unique_ptr<Dataset> make_dataset(const std::string& name, ImageShape shape, std::uint64_t seed,
                                      const DatasetOptions& opt) {
  if (name == "gmm") {
    return std::make_unique<GmmDataset>(
        make_random_gmm(shape, opt.gmm_components, opt.gmm_sigma, derive_seed(seed, 0x676d6d)), seed);
  }
  if (name == "shapes") return std::make_unique<ShapesDataset>(shape, seed, opt.max_shapes, opt.jitter, opt.high_contrast);
  if (name == "stripes") return std::make_unique<StripesDataset>(shape, seed);
  if (name == "blobs") return std::make_unique<BlobsDataset>(shape, seed);
  throw Error("unknown dataset '" + name + "'");
}

}  // namespace diip
