#include "diip/sampler.hpp"

#include <cmath>
#include <string>

namespace diip {

DdimSampler::DdimSampler(const Denoiser& den, NoiseSchedule sched, int dt)
    : den_(&den), sched_(std::move(sched)), dt_(dt) {
  if (dt < 1 || dt > sched_.steps()) throw Error("sampler stride must lie in [1, T]");
  if (sched_.steps() % dt != 0) {
    throw Error("T = " + std::to_string(sched_.steps()) + " is not divisible by dt = " +
                std::to_string(dt));
  }
}

Image DdimSampler::generate(const Image& z) const {
  if (shape_of(z) != den_->shape()) throw Error("latent shape does not match the denoiser");
  Image z_t = z;
  Image x0;
  for (int t = sched_.steps(); t > 0; t -= dt_) {
    const Image eps = den_->eval(z_t, t);
    x0 = x0_hat_from(z_t, eps, t, sched_);
    z_t = ddim_step(z_t, x0, t, dt_, sched_);
  }
  return x0;
}

Image DdimSampler::generate(const Image& z, Tape& tape) const {
  if (shape_of(z) != den_->shape()) throw Error("latent shape does not match the denoiser");
  tape.times.clear();
  tape.eps_pullbacks.clear();
  Image z_t = z;
  Image x0;
  for (int t = sched_.steps(); t > 0; t -= dt_) {
    EpsWithPullback e = den_->eval_with_pullback(z_t, t);
    x0 = x0_hat_from(z_t, e.eps, t, sched_);
    z_t = ddim_step(z_t, x0, t, dt_, sched_);
    tape.times.push_back(t);
    tape.eps_pullbacks.push_back(std::move(e.pullback));
  }
  return x0;
}

Image DdimSampler::pullback(const Tape& tape, const Image& grad_out) const {
  // Step: x0 = (z_t - s eps(z_t)) / r ;  z_next = (A - B r / s) x0 + (B / s) z_t
  // with r = sqrt(ab_t), s = sqrt(1 - ab_t), A = sqrt(ab_{t-dt}), B = sqrt(1 - ab_{t-dt}).
  // The generator output is x0 of the last step; z_next of the last step is unused.
  const std::size_t n = tape.times.size();
  Image g_znext(grad_out.height(), grad_out.width(), grad_out.channels());
  for (std::size_t i = n; i-- > 0;) {
    const int t = tape.times[i];
    const double ab = sched_.alpha_bar(t), ab_prev = sched_.alpha_bar(t - dt_);
    const double r = std::sqrt(ab), s = std::sqrt(1.0 - ab);
    const double A = std::sqrt(ab_prev), B = std::sqrt(1.0 - ab_prev);
    const Image g_x0 = (i == n - 1) ? grad_out : g_znext * (A - B * r / s);
    Image g_zt = axpby(B / s, g_znext, 1.0 / r, g_x0);
    g_zt -= tape.eps_pullbacks[i](g_x0) * (s / r);
    g_znext = std::move(g_zt);
  }
  return g_znext;
}

Image ddim_generate(const Image& z, const Denoiser& den, const NoiseSchedule& sched, int dt) {
  return DdimSampler(den, sched, dt).generate(z);
}

}  // namespace diip
