#include "diip/schedule.hpp"

#include <cmath>
#include <string>

namespace diip {

NoiseSchedule::NoiseSchedule(int steps, double beta1, double betaT)
    : steps_(steps), beta1_(beta1), betaT_(betaT) {
  if (steps < 2) throw Error("schedule needs T >= 2");
  if (!(beta1 > 0.0 && beta1 < betaT && betaT < 1.0)) {
    throw Error("schedule needs 0 < beta1 < betaT < 1");
  }
  alpha_bar_.resize(static_cast<std::size_t>(steps) + 1);
  alpha_bar_[0] = 1.0;
  for (int s = 1; s <= steps; ++s) {
    const double beta = beta1 + (betaT - beta1) * (s - 1) / static_cast<double>(steps - 1);
    alpha_bar_[s] = alpha_bar_[s - 1] * (1.0 - beta);
  }
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > steps_) {
    throw Error("diffusion step " + std::to_string(t) + " outside [0, " + std::to_string(steps_) + "]");
  }
  return alpha_bar_[static_cast<std::size_t>(t)];
}

NoiseSchedule make_schedule(int steps, double beta1, double betaT) {
  return NoiseSchedule(steps, beta1, betaT);
}

Image forward_diffuse(const Image& x0, int t, const Image& noise, const NoiseSchedule& sched) {
  require_same_shape(x0, noise, "forward_diffuse");
  const double ab = sched.alpha_bar(t);
  if (t == 0) return x0;
  return axpby(std::sqrt(ab), x0, std::sqrt(1.0 - ab), noise);
}

Image x0_hat_from(const Image& z_t, const Image& eps_pred, int t, const NoiseSchedule& sched) {
  require_same_shape(z_t, eps_pred, "x0_hat_from");
  if (t < 1) throw Error("x0_hat_from requires t >= 1");
  const double ab = sched.alpha_bar(t);
  const double inv = 1.0 / std::sqrt(ab);
  return axpby(inv, z_t, -std::sqrt(1.0 - ab) * inv, eps_pred);
}

Image ddim_step(const Image& z_t, const Image& x0_hat, int t, int dt, const NoiseSchedule& sched) {
  require_same_shape(z_t, x0_hat, "ddim_step");
  if (dt < 1) throw Error("ddim_step requires dt >= 1");
  if (t - dt < 0) throw Error("ddim_step: t - dt < 0");
  if (t < 1) throw Error("ddim_step requires t >= 1");
  const double ab = sched.alpha_bar(t);
  const double ab_prev = sched.alpha_bar(t - dt);
  const double sqrt_ab = std::sqrt(ab), sqrt_1m = std::sqrt(1.0 - ab);
  const double sqrt_prev = std::sqrt(ab_prev), sqrt_prev_1m = std::sqrt(1.0 - ab_prev);
  Image out(z_t.height(), z_t.width(), z_t.channels());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double eps_dir = (z_t[i] - sqrt_ab * x0_hat[i]) / sqrt_1m;
    out[i] = sqrt_prev * x0_hat[i] + sqrt_prev_1m * eps_dir;
  }
  return out;
}

}  // namespace diip
