#pragma once

#include <cstdint>
#include <vector>

#include "diip/inversion.hpp"
#include "diip/trajectory.hpp"
#include "diip/unet.hpp"

namespace diip {

struct DipConfig {
  double lr = 0.01;
  long max_iters = 1500;
  int window = 16;
  std::uint64_t seed = 0;
  int input_channels = 8;
  double input_scale = 0.1;  // z ~ U(0, input_scale)
  int c1 = 16, c2 = 32, c3 = 64;
};

/// f_theta(z): an untimed UNet with sigmoid output and a frozen noise input.
class DipNet {
 public:
  DipNet(const DipConfig& cfg, ImageShape shape);

  Image forward() const;
  /// |f(z) - y|^2; parameter gradients are written (not accumulated) into the
  /// net. Optionally returns f(z).
  double loss_and_grad(const Image& y, Image* output = nullptr);

  nn::UNet& net() { return net_; }
  const nn::UNet& net() const { return net_; }
  const nn::Tensor& input() const { return z_; }

 private:
  nn::UNet net_;
  nn::Tensor z_;
  ImageShape shape_;
};

struct DipRun {
  Trajectory trajectory;
};

/// Adam on theta with z fixed, recording the same trajectory fields as the
/// latent inversion. A non-finite loss sets trajectory.failure and stops.
DipRun dip_run(const Image& y, const DipConfig& cfg,
               const std::vector<InversionObserver*>& observers = {},
               const Image* reference = nullptr);

}  // namespace diip
