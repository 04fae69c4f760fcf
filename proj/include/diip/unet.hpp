#pragma once

#include <cstdint>

#include "diip/nn.hpp"

namespace diip::nn {

struct UNetConfig {
  int in_channels = 1;
  int out_channels = 1;
  int c1 = 16, c2 = 32, c3 = 64;
  bool time_conditioned = true;  // sinusoidal step embedding -> per-level channel biases
  bool sigmoid_output = false;
  int embed_dim = 32;
  int embed_hidden = 64;
};

/// Two-level encoder-decoder with skip connections:
///   16x16 -> 8x8 -> 4x4 -> 8x8 -> 16x16 (for a 16x16 input).
/// Spatial dims must be divisible by 4.
class UNet {
 public:
  explicit UNet(UNetConfig cfg);

  /// Everything backward() needs.
  struct Cache {
    Tensor x;
    std::vector<double> emb, emb_pre, emb_act;
    Tensor h1a_pre, h1a, h1_pre, h1, h2a_pre, h2a, h2_pre, h2, h3a_pre, h3a, h3_pre, h3;
    Tensor up3, u2a_pre, u2a, cat2, u2_pre, u2, up2, u1a_pre, u1a, cat1, u1_pre, u1, out_pre;
  };

  Tensor forward(const Tensor& x, int t, Cache* cache = nullptr) const;
  /// dL/dx given dL/d(output). Parameter gradients are accumulated into
  /// `grads` (normally &params()) when non-null.
  Tensor backward(const Cache& cache, const Tensor& grad_out, ParamStore* grads = nullptr) const;

  ParamStore& params() { return ps_; }
  const ParamStore& params() const { return ps_; }
  const UNetConfig& config() const { return cfg_; }
  void init(std::uint64_t seed) { init_params(ps_, seed); }

 private:
  UNetConfig cfg_;
  ParamStore ps_;
  Linear t1_, tb_;
  Conv2d e1a_, e1b_, d1_, e2_, d2_, m_, u2_, f2_, u1_, f1_, o_;
};

}  // namespace diip::nn
