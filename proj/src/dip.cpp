#include "diip/dip.hpp"

#include <cmath>
#include <string>

#include "diip/adam.hpp"
#include "diip/rng.hpp"

namespace diip {

namespace {

nn::UNetConfig dip_unet(const DipConfig& cfg, ImageShape shape) {
  nn::UNetConfig u;
  u.in_channels = cfg.input_channels;
  u.out_channels = shape.channels;
  u.c1 = cfg.c1;
  u.c2 = cfg.c2;
  u.c3 = cfg.c3;
  u.time_conditioned = false;
  u.sigmoid_output = true;
  return u;
}

}  // namespace

DipNet::DipNet(const DipConfig& cfg, ImageShape shape)
    : net_(dip_unet(cfg, shape)), z_(cfg.input_channels, shape.height, shape.width), shape_(shape) {
  net_.init(derive_seed(cfg.seed, 0x646970));
  Philox rng(derive_seed(cfg.seed, 0x7a), 0);
  for (double& v : z_.v) v = cfg.input_scale * rng.uniform();
}

Image DipNet::forward() const { return nn::to_image(net_.forward(z_, 0)); }

double DipNet::loss_and_grad(const Image& y, Image* output) {
  if (shape_of(y) != shape_) throw Error("dip: target shape differs from the network");
  nn::UNet::Cache cache;
  nn::Tensor out = net_.forward(z_, 0, &cache);
  if (output) *output = nn::to_image(out);
  const nn::Tensor target = nn::from_image(y);
  double loss = 0.0;
  for (std::size_t i = 0; i < out.v.size(); ++i) {
    const double r = out.v[i] - target.v[i];
    loss += r * r;
    out.v[i] = 2.0 * r;
  }
  net_.params().zero_grad();
  net_.backward(cache, out, &net_.params());
  return loss;
}

DipRun dip_run(const Image& y, const DipConfig& cfg,
               const std::vector<InversionObserver*>& observers, const Image* reference) {
  if (cfg.max_iters < 0) throw Error("dip: max_iters must be >= 0");
  if (reference) require_same_shape(y, *reference, "dip reference");
  DipNet dip(cfg, shape_of(y));
  auto& ps = dip.net().params();
  std::vector<AdamState> opt;
  for (const auto& p : ps.all()) opt.emplace_back(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}, p.numel());

  DipRun run{Trajectory(cfg.window)};
  double prev = 0.0;
  for (long k = 0; k <= cfg.max_iters; ++k) {
    Image x_hat;
    const double loss = dip.loss_and_grad(y, &x_hat);
    if (!std::isfinite(loss)) {
      run.trajectory.failure = "dip: non-finite loss at iteration " + std::to_string(k);
      break;
    }
    TrajectoryRecord rec;
    rec.k = k;
    rec.loss = loss;
    rec.delta_k = k == 0 ? kUndefinedSlope : normalized_slope(prev, loss);
    rec.lap_var = laplacian_variance(x_hat);
    if (reference) rec.psnr_ref = psnr(x_hat, *reference);
    run.trajectory.append(rec, x_hat);
    prev = loss;
    bool halt = false;
    for (auto* o : observers) halt = o->observe(run.trajectory, rec) || halt;
    if (halt || k == cfg.max_iters) break;
    for (std::size_t i = 0; i < ps.size(); ++i) adam_update(ps[i].value, ps[i].grad, opt[i]);
  }
  return run;
}

}  // namespace diip
