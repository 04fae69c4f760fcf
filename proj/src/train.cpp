#include "diip/train.hpp"

#include <cmath>
#include <string>

#include "diip/adam.hpp"
#include "diip/rng.hpp"

namespace diip {

TrainingMeta train_denoiser(ConvDenoiser& den, const Dataset& data, const TrainConfig& cfg,
                            const TrainLog& log) {
  if (data.shape() != den.shape()) throw Error("train: dataset shape differs from the model");
  if (cfg.iters < 0 || cfg.batch < 1) throw Error("train: invalid iteration/batch count");
  const NoiseSchedule& sched = den.schedule();
  const int T = sched.steps();
  if (cfg.t_stride < 0 || (cfg.t_stride > 0 && T % cfg.t_stride != 0)) {
    throw Error("train: t_stride must divide T");
  }
  nn::UNet& net = den.net();
  nn::ParamStore& ps = net.params();
  std::vector<AdamState> opt;
  for (const auto& p : ps.all()) opt.emplace_back(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}, p.numel());

  const ImageShape s = den.shape();
  const double scale = 1.0 / (static_cast<double>(cfg.batch) * s.height * s.width * s.channels);
  const std::uint64_t noise_seed = derive_seed(cfg.seed, 0x747261696e);
  nn::UNet::Cache cache;
  for (long it = 0; it < cfg.iters; ++it) {
    Philox rng(noise_seed, static_cast<std::uint64_t>(it));
    ps.zero_grad();
    double loss = 0.0;
    for (int b = 0; b < cfg.batch; ++b) {
      const Image x0 = data.sample(static_cast<std::uint64_t>(it) * cfg.batch + b);
      const int t = cfg.t_stride > 0
                        ? cfg.t_stride * (1 + static_cast<int>(rng.below(T / cfg.t_stride)))
                        : 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(T)));
      const Image eps = normal_image(s.height, s.width, s.channels, rng);
      const Image zt = forward_diffuse(x0, t, eps, sched);
      nn::Tensor pred = net.forward(nn::from_image(zt), t, &cache);
      const nn::Tensor target = nn::from_image(eps);
      for (std::size_t i = 0; i < pred.v.size(); ++i) {
        const double r = pred.v[i] - target.v[i];
        loss += r * r;
        pred.v[i] = 2.0 * r * scale;
      }
      net.backward(cache, pred, &ps);
    }
    loss *= scale;
    if (!std::isfinite(loss)) {
      throw NumericalError("train: non-finite loss at step " + std::to_string(it));
    }
    for (std::size_t i = 0; i < ps.size(); ++i) adam_update(ps[i].value, ps[i].grad, opt[i]);
    if (log) log(it, loss);
  }
  quantize_to_float(ps);
  return TrainingMeta{data.tag(), cfg.iters, cfg.seed};
}

}  // namespace diip
