#pragma once

#include <vector>

#include "diip/image.hpp"

namespace diip {

/// Cumulative products alpha_bar[t] = prod_{s<=t} (1 - beta_s), t = 0..T,
/// with alpha_bar[0] = 1 and beta linearly spaced from beta1 to betaT.
class NoiseSchedule {
 public:
  NoiseSchedule(int steps, double beta1, double betaT);

  int steps() const { return steps_; }
  double beta1() const { return beta1_; }
  double betaT() const { return betaT_; }
  double alpha_bar(int t) const;
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

 private:
  int steps_;
  double beta1_;
  double betaT_;
  std::vector<double> alpha_bar_;
};

inline constexpr int kDefaultSteps = 1000;
inline constexpr double kDefaultBeta1 = 1e-4;
inline constexpr double kDefaultBetaT = 0.02;
inline constexpr int kDefaultStride = 100;

NoiseSchedule make_schedule(int steps = kDefaultSteps, double beta1 = kDefaultBeta1,
                            double betaT = kDefaultBetaT);

/// sqrt(ab_t) x0 + sqrt(1 - ab_t) noise. t = 0 returns x0.
Image forward_diffuse(const Image& x0, int t, const Image& noise, const NoiseSchedule& sched);

/// (z_t - sqrt(1 - ab_t) eps) / sqrt(ab_t)
Image x0_hat_from(const Image& z_t, const Image& eps_pred, int t, const NoiseSchedule& sched);

/// Deterministic DDIM move from t to t - dt given the current clean estimate.
Image ddim_step(const Image& z_t, const Image& x0_hat, int t, int dt, const NoiseSchedule& sched);

}  // namespace diip
