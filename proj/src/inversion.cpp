#include "diip/inversion.hpp"

#include <cmath>
#include <string>

#include "diip/rng.hpp"

namespace diip {

Latent init_latent(ImageShape shape, std::uint64_t seed) {
  Philox rng(seed, 0x7a);
  return Latent{normal_image(shape.height, shape.width, shape.channels, rng), seed};
}

LossAndGrad recon_loss(const Image& z, const Image& y, const DdimSampler& g) {
  if (shape_of(y) != g.shape()) throw Error("recon_loss: target shape differs from the model");
  DdimSampler::Tape tape;
  LossAndGrad out;
  out.x_hat = g.generate(z, tape);
  const Image r = out.x_hat - y;
  out.loss = squared_norm(r);
  if (!std::isfinite(out.loss)) throw NumericalError("recon_loss: non-finite loss");
  out.grad = g.pullback(tape, r * 2.0);
  if (!out.grad.all_finite()) throw NumericalError("recon_loss: non-finite gradient");
  return out;
}

void adam_step(Latent& z, const Image& grad, AdamState& st) {
  require_same_shape(z.z, grad, "adam_step");
  if (st.m.empty()) st = AdamState(st.cfg, z.z.size());
  adam_update(z.z.data(), grad.data(), st);
}

InversionRun run_inversion(const Image& y, const DdimSampler& g, const InversionConfig& cfg,
                           const std::vector<InversionObserver*>& observers,
                           const Image* reference) {
  if (cfg.max_iters < 0) throw Error("inversion: max_iters must be >= 0");
  if (!(cfg.lr > 0)) throw Error("inversion: learning rate must be positive");
  if (reference) require_same_shape(y, *reference, "inversion reference");
  InversionRun run{Trajectory(cfg.window), init_latent(g.shape(), cfg.seed)};
  AdamState opt;
  opt.cfg.lr = cfg.lr;
  double prev_loss = 0.0;
  for (long k = 0; k <= cfg.max_iters; ++k) {
    LossAndGrad lg;
    try {
      lg = recon_loss(run.final_latent.z, y, g);
    } catch (const NumericalError& e) {
      run.trajectory.failure = std::string(e.what()) + " at iteration " + std::to_string(k);
      return run;
    }
    TrajectoryRecord rec;
    rec.k = k;
    rec.loss = lg.loss;
    rec.delta_k = k == 0 ? kUndefinedSlope : normalized_slope(prev_loss, lg.loss);
    rec.lap_var = laplacian_variance(lg.x_hat);
    if (reference) rec.psnr_ref = psnr(lg.x_hat, *reference);
    run.trajectory.append(rec, lg.x_hat);
    prev_loss = lg.loss;
    bool halt = false;
    for (auto* obs : observers) halt = obs->observe(run.trajectory, rec) || halt;
    if (halt || k == cfg.max_iters) break;
    adam_step(run.final_latent, lg.grad, opt);
  }
  return run;
}

}  // namespace diip
