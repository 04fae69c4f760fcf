#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "diip/image.hpp"
#include "diip/schedule.hpp"

namespace diip {

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 0;
  bool operator==(const ImageShape&) const = default;
};

ImageShape shape_of(const Image& img);

/// Noise prediction together with its vector-Jacobian product w.r.t. the input.
struct EpsWithPullback {
  Image eps;
  std::function<Image(const Image&)> pullback;
};

/// eps_theta(z_t, t). Implementations are pure and never mutate their weights
/// when evaluated, so one instance may be shared across threads.
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual ImageShape shape() const = 0;
  virtual Image eval(const Image& z_t, int t) const = 0;
  virtual EpsWithPullback eval_with_pullback(const Image& z_t, int t) const = 0;
};

/// Isotropic Gaussian mixture over images.
struct GMMModel {
  std::vector<Image> means;
  std::vector<double> variances;  // sigma_d^2 per component
  std::vector<double> weights;

  std::size_t size() const { return means.size(); }
  void validate() const;
};

/// Exact eps* = (z_t - sqrt(ab) E[x0 | z_t]) / sqrt(1 - ab) for GMM data.
class AnalyticGMMDenoiser final : public Denoiser {
 public:
  AnalyticGMMDenoiser(GMMModel gmm, NoiseSchedule sched);

  ImageShape shape() const override;
  Image eval(const Image& z_t, int t) const override;
  EpsWithPullback eval_with_pullback(const Image& z_t, int t) const override;

  /// E[x0 | z_t] and the posterior responsibilities.
  Image posterior_mean(const Image& z_t, int t, std::vector<double>* resp = nullptr) const;

  const GMMModel& gmm() const { return gmm_; }
  const NoiseSchedule& schedule() const { return sched_; }

 private:
  GMMModel gmm_;
  NoiseSchedule sched_;
};

Image analytic_gmm_eps(const Image& z_t, int t, const GMMModel& gmm, const NoiseSchedule& sched);

}  // namespace diip
