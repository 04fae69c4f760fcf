#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "diip/denoiser.hpp"
#include "diip/image.hpp"

namespace diip {

/// Infinite, index-addressable source of clean images: sample(i) depends only
/// on (seed, i), so any subset can be regenerated independently.
class Dataset {
 public:
  virtual ~Dataset() = default;
  virtual ImageShape shape() const = 0;
  virtual Image sample(std::uint64_t index) const = 0;
  /// Tag recorded in checkpoints, e.g. "shapes:16x16x1:max=1".
  virtual std::string tag() const = 0;
};

class GmmDataset final : public Dataset {
 public:
  GmmDataset(GMMModel gmm, std::uint64_t seed);
  ImageShape shape() const override;
  Image sample(std::uint64_t index) const override;
  std::string tag() const override;
  const GMMModel& gmm() const { return gmm_; }

 private:
  GMMModel gmm_;
  std::uint64_t seed_;
};

/// Flat background with 1..max_shapes hard-edged discs or rectangles. Shape
/// centres are offset from the image centre by up to jitter/2 of the extent
/// (jitter 1: anywhere, 0: always centred). High contrast draws the background
/// from [0.1, 0.3] and shapes from [0.7, 0.9] instead of [0.1, 0.5] and [0.3, 0.95].
class ShapesDataset final : public Dataset {
 public:
  ShapesDataset(ImageShape shape, std::uint64_t seed, int max_shapes = 1, double jitter = 1.0,
                bool high_contrast = false);
  ImageShape shape() const override { return shape_; }
  Image sample(std::uint64_t index) const override;
  std::string tag() const override;

 private:
  ImageShape shape_;
  std::uint64_t seed_;
  int max_shapes_;
  double jitter_;
  bool high_contrast_;
};

/// Oriented square-wave gratings.
class StripesDataset final : public Dataset {
 public:
  StripesDataset(ImageShape shape, std::uint64_t seed);
  ImageShape shape() const override { return shape_; }
  Image sample(std::uint64_t index) const override;
  std::string tag() const override;

 private:
  ImageShape shape_;
  std::uint64_t seed_;
};

/// Sums of smooth Gaussian bumps.
class BlobsDataset final : public Dataset {
 public:
  BlobsDataset(ImageShape shape, std::uint64_t seed);
  ImageShape shape() const override { return shape_; }
  Image sample(std::uint64_t index) const override;
  std::string tag() const override;

 private:
  ImageShape shape_;
  std::uint64_t seed_;
};

/// K components with means drawn uniformly in [lo, hi] per pixel, shared
/// variance sigma_d^2 and equal weights.
GMMModel make_random_gmm(ImageShape shape, int k, double sigma_d, std::uint64_t seed,
                         double lo = 0.1, double hi = 0.9);

/// Builds a dataset from a name ("gmm", "shapes", "stripes", "blobs").
struct DatasetOptions {
  int gmm_components = 8;
  double gmm_sigma = 0.05;
  int max_shapes = 1;
  double jitter = 1.0;
  bool high_contrast = false;
};

std::unique_ptr<Dataset> make_dataset(const std::string& name, ImageShape shape, std::uint64_t seed,
                                      const DatasetOptions& opt = {});

}  // namespace diip
