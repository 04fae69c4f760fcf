#pragma once

#include <cstdint>
#include <functional>

#include "diip/conv_denoiser.hpp"
#include "diip/datasets.hpp"

namespace diip {

struct TrainConfig {
  long iters = 6000;
  int batch = 32;
  double lr = 2e-3;
  std::uint64_t seed = 0;
  /// 0: t uniform on 1..T. Otherwise t is drawn from {s, 2s, ..., T}, the
  /// grid a stride-s sampler actually visits.
  int t_stride = 0;
};

/// Per-step callback: (step, mean batch loss).
using TrainLog = std::function<void(long, double)>;

/// Minimizes E|eps - eps_theta(sqrt(ab_t) x0 + sqrt(1 - ab_t) eps, t)|^2 with
/// Adam. Weights are snapped to float32 on return so they equal their
/// checkpointed form. Throws NumericalError on a non-finite loss.
TrainingMeta train_denoiser(ConvDenoiser& den, const Dataset& data, const TrainConfig& cfg,
                            const TrainLog& log = {});

}  // namespace diip
