#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diip/image.hpp"

namespace diip::nn {

/// Channel-major activation tensor (C, H, W).
struct Tensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(int c_, int h_, int w_, double fill = 0.0)
      : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, fill) {}

  std::size_t size() const { return v.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  double* channel(int ch) { return v.data() + ch * plane(); }
  const double* channel(int ch) const { return v.data() + ch * plane(); }
};

Tensor from_image(const Image& img);
Image to_image(const Tensor& t);

/// Named trainable array. Gradients live alongside values.
struct Param {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;

  std::size_t numel() const { return value.size(); }
};

/// Owns parameters in registration order, which is also checkpoint order.
class ParamStore {
 public:
  std::size_t add(std::string name, std::vector<int> shape);
  Param& operator[](std::size_t i) { return params_[i]; }
  const Param& operator[](std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }
  std::size_t numel() const;
  Param* find(const std::string& name);
  const Param* find(const std::string& name) const;
  void zero_grad();
  std::vector<Param>& all() { return params_; }
  const std::vector<Param>& all() const { return params_; }

 private:
  std::vector<Param> params_;
};

/// 3x3 (or kxk) convolution with zero padding k/2 and stride 1 or 2.
struct Conv2d {
  std::size_t weight = 0, bias = 0;  // indices into the owning ParamStore
  int cin = 0, cout = 0, k = 3, stride = 1;

  static Conv2d make(ParamStore& ps, const std::string& name, int cin, int cout, int k = 3,
                     int stride = 1);
  Tensor forward(const ParamStore& ps, const Tensor& x) const;
  /// Returns dL/dx; accumulates dL/dW and dL/db into `grads` when non-null.
  Tensor backward(const ParamStore& ps, const Tensor& x, const Tensor& grad_out,
                  ParamStore* grads) const;
};

struct Linear {
  std::size_t weight = 0, bias = 0;
  int in = 0, out = 0;

  static Linear make(ParamStore& ps, const std::string& name, int in, int out);
  std::vector<double> forward(const ParamStore& ps, const std::vector<double>& x) const;
  std::vector<double> backward(const ParamStore& ps, const std::vector<double>& x,
                               const std::vector<double>& grad_out, ParamStore* grads) const;
};

double silu(double a);
double silu_grad(double a);
void silu_inplace(Tensor& t);
/// grad *= silu'(pre) elementwise.
void silu_backward_inplace(Tensor& grad, const Tensor& pre);

Tensor upsample2x(const Tensor& x);
Tensor upsample2x_backward(const Tensor& grad);
Tensor concat(const Tensor& a, const Tensor& b);
void split(const Tensor& g, int ca, Tensor& ga, Tensor& gb);
void add_channel_bias(Tensor& t, const double* bias);

/// Sinusoidal embedding of the diffusion step.
std::vector<double> time_embedding(int t, int dim);

/// He-style uniform initialisation driven by a counter-based RNG.
void init_params(ParamStore& ps, std::uint64_t seed);

}  // namespace diip::nn
