#pragma once

#include <functional>
#include <vector>

#include "diip/denoiser.hpp"
#include "diip/schedule.hpp"

namespace diip {

/// The frozen generator g(z): deterministic DDIM from t = T down to 0 in
/// strides of dt, returning the final clean estimate.
class DdimSampler {
 public:
  DdimSampler(const Denoiser& den, NoiseSchedule sched, int dt = kDefaultStride);

  /// Per-step state retained for reverse-mode differentiation.
  struct Tape {
    std::vector<int> times;
    std::vector<std::function<Image(const Image&)>> eps_pullbacks;
  };

  Image generate(const Image& z) const;
  Image generate(const Image& z, Tape& tape) const;
  /// Vector-Jacobian product d g(z)^T grad_out using a tape from generate().
  Image pullback(const Tape& tape, const Image& grad_out) const;

  const Denoiser& denoiser() const { return *den_; }
  const NoiseSchedule& schedule() const { return sched_; }
  int stride() const { return dt_; }
  ImageShape shape() const { return den_->shape(); }

 private:
  const Denoiser* den_;
  NoiseSchedule sched_;
  int dt_;
};

Image ddim_generate(const Image& z, const Denoiser& den, const NoiseSchedule& sched,
                    int dt = kDefaultStride);

}  // namespace diip
