#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "diip/adam.hpp"
#include "diip/sampler.hpp"
#include "diip/trajectory.hpp"

namespace diip {

struct Latent {
  Image z;
  std::uint64_t seed = 0;
};

/// i.i.d. N(0, 1) entries from the counter-based generator.
Latent init_latent(ImageShape shape, std::uint64_t seed);

struct LossAndGrad {
  double loss = 0.0;
  Image grad;   // dE/dz
  Image x_hat;  // g(z)
};

/// E = |g(z) - y|^2 and its exact gradient through every sampler step.
/// Throws NumericalError on a non-finite loss or gradient.
LossAndGrad recon_loss(const Image& z, const Image& y, const DdimSampler& g);

/// Bias-corrected Adam on the latent; creates the moments on first use.
void adam_step(Latent& z, const Image& grad, AdamState& st);

/// Sees every record as it is appended. Returning true halts the run.
class InversionObserver {
 public:
  virtual ~InversionObserver() = default;
  virtual bool observe(Trajectory& traj, const TrajectoryRecord& rec) = 0;
};

struct InversionConfig {
  double lr = 0.0015;
  long max_iters = 1500;  // N
  int window = 16;        // W
  std::uint64_t seed = 0;
};

struct InversionRun {
  Trajectory trajectory;
  Latent final_latent;
};

/// Records k = 0..N (or until an observer halts). `reference` only fills
/// psnr_ref for benchmarks; the update and the observers never read it.
InversionRun run_inversion(const Image& y, const DdimSampler& g, const InversionConfig& cfg,
                           const std::vector<InversionObserver*>& observers = {},
                           const Image* reference = nullptr);

}  // namespace diip
