#pragma once

#include <filesystem>
#include <string>

#include "diip/checkpoint.hpp"
#include "diip/denoiser.hpp"
#include "diip/unet.hpp"

namespace diip {

/// Learned eps_theta: a time-conditioned UNet on single fixed-size images.
class ConvDenoiser final : public Denoiser {
 public:
  ConvDenoiser(nn::UNet net, NoiseSchedule sched, ImageShape shape);

  ImageShape shape() const override { return shape_; }
  Image eval(const Image& z_t, int t) const override;
  EpsWithPullback eval_with_pullback(const Image& z_t, int t) const override;

  const nn::UNet& net() const { return net_; }
  nn::UNet& net() { return net_; }
  const NoiseSchedule& schedule() const { return sched_; }

 private:
  void check(const Image& z_t, int t) const;

  nn::UNet net_;
  NoiseSchedule sched_;
  ImageShape shape_;
};

/// Provenance recorded alongside the weights.
struct TrainingMeta {
  std::string dataset;
  long iterations = 0;
  std::uint64_t seed = 0;
};

Checkpoint to_checkpoint(const ConvDenoiser& den, const TrainingMeta& meta);
ConvDenoiser from_checkpoint(const Checkpoint& ckpt);
TrainingMeta training_meta(const Checkpoint& ckpt);

void save_denoiser(const std::filesystem::path& path, const ConvDenoiser& den,
                   const TrainingMeta& meta);
ConvDenoiser load_denoiser(const std::filesystem::path& path);

/// Snap every weight to the nearest float32 so the in-memory model equals
/// what a save/load round trip produces.
void quantize_to_float(nn::ParamStore& ps);

}  // namespace diip
