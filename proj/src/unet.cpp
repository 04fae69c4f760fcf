#include "diip/unet.hpp"

#include <cmath>

namespace diip::nn {

UNet::UNet(UNetConfig cfg) : cfg_(cfg) {
  if (cfg_.time_conditioned) {
    t1_ = Linear::make(ps_, "temb.fc1", cfg_.embed_dim, cfg_.embed_hidden);
    tb_ = Linear::make(ps_, "temb.fc2", cfg_.embed_hidden, cfg_.c1 + cfg_.c2 + cfg_.c3);
  }
  e1a_ = Conv2d::make(ps_, "enc1a", cfg_.in_channels, cfg_.c1);
  e1b_ = Conv2d::make(ps_, "enc1b", cfg_.c1, cfg_.c1);
  d1_ = Conv2d::make(ps_, "down1", cfg_.c1, cfg_.c2, 3, 2);
  e2_ = Conv2d::make(ps_, "enc2", cfg_.c2, cfg_.c2);
  d2_ = Conv2d::make(ps_, "down2", cfg_.c2, cfg_.c3, 3, 2);
  m_ = Conv2d::make(ps_, "mid", cfg_.c3, cfg_.c3);
  u2_ = Conv2d::make(ps_, "up2", cfg_.c3, cfg_.c2);
  f2_ = Conv2d::make(ps_, "fuse2", 2 * cfg_.c2, cfg_.c2);
  u1_ = Conv2d::make(ps_, "up1", cfg_.c2, cfg_.c1);
  f1_ = Conv2d::make(ps_, "fuse1", 2 * cfg_.c1, cfg_.c1);
  o_ = Conv2d::make(ps_, "out", cfg_.c1, cfg_.out_channels);
}

namespace {

Tensor activated(const Tensor& pre) {
  Tensor a = pre;
  silu_inplace(a);
  return a;
}

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

}  // namespace

Tensor UNet::forward(const Tensor& x, int t, Cache* cache) const {
  if (x.c != cfg_.in_channels) throw Error("unet: input channel mismatch");
  if (x.h % 4 != 0 || x.w % 4 != 0) throw Error("unet: spatial dims must be divisible by 4");
  Cache local;
  Cache& k = cache ? *cache : local;
  k.x = x;

  std::vector<double> bias(static_cast<std::size_t>(cfg_.c1 + cfg_.c2 + cfg_.c3), 0.0);
  if (cfg_.time_conditioned) {
    k.emb = time_embedding(t, cfg_.embed_dim);
    k.emb_pre = t1_.forward(ps_, k.emb);
    k.emb_act = k.emb_pre;
    for (double& v : k.emb_act) v = silu(v);
    bias = tb_.forward(ps_, k.emb_act);
  }
  const double* b1 = bias.data();
  const double* b2 = b1 + cfg_.c1;
  const double* b3 = b2 + cfg_.c2;

  k.h1a_pre = e1a_.forward(ps_, x);
  k.h1a = activated(k.h1a_pre);
  k.h1_pre = e1b_.forward(ps_, k.h1a);
  add_channel_bias(k.h1_pre, b1);
  k.h1 = activated(k.h1_pre);

  k.h2a_pre = d1_.forward(ps_, k.h1);
  k.h2a = activated(k.h2a_pre);
  k.h2_pre = e2_.forward(ps_, k.h2a);
  add_channel_bias(k.h2_pre, b2);
  k.h2 = activated(k.h2_pre);

  k.h3a_pre = d2_.forward(ps_, k.h2);
  k.h3a = activated(k.h3a_pre);
  k.h3_pre = m_.forward(ps_, k.h3a);
  add_channel_bias(k.h3_pre, b3);
  k.h3 = activated(k.h3_pre);

  k.up3 = upsample2x(k.h3);
  k.u2a_pre = u2_.forward(ps_, k.up3);
  k.u2a = activated(k.u2a_pre);
  k.cat2 = concat(k.u2a, k.h2);
  k.u2_pre = f2_.forward(ps_, k.cat2);
  k.u2 = activated(k.u2_pre);

  k.up2 = upsample2x(k.u2);
  k.u1a_pre = u1_.forward(ps_, k.up2);
  k.u1a = activated(k.u1a_pre);
  k.cat1 = concat(k.u1a, k.h1);
  k.u1_pre = f1_.forward(ps_, k.cat1);
  k.u1 = activated(k.u1_pre);

  k.out_pre = o_.forward(ps_, k.u1);
  if (!cfg_.sigmoid_output) return k.out_pre;
  Tensor y = k.out_pre;
  for (double& v : y.v) v = sigmoid(v);
  return y;
}

Tensor UNet::backward(const Cache& k, const Tensor& grad_out, ParamStore* grads) const {
  Tensor g = grad_out;
  if (cfg_.sigmoid_output) {
    for (std::size_t i = 0; i < g.v.size(); ++i) {
      const double s = sigmoid(k.out_pre.v[i]);
      g.v[i] *= s * (1.0 - s);
    }
  }
  std::vector<double> gbias(static_cast<std::size_t>(cfg_.c1 + cfg_.c2 + cfg_.c3), 0.0);
  auto collect_bias = [&](const Tensor& gpre, int offset) {
    for (int c = 0; c < gpre.c; ++c) {
      const double* p = gpre.channel(c);
      double s = 0.0;
      for (std::size_t i = 0; i < gpre.plane(); ++i) s += p[i];
      gbias[static_cast<std::size_t>(offset + c)] += s;
    }
  };

  Tensor g_u1 = o_.backward(ps_, k.u1, g, grads);
  silu_backward_inplace(g_u1, k.u1_pre);
  Tensor g_cat1 = f1_.backward(ps_, k.cat1, g_u1, grads);
  Tensor g_u1a, g_h1_skip;
  split(g_cat1, cfg_.c1, g_u1a, g_h1_skip);
  silu_backward_inplace(g_u1a, k.u1a_pre);
  Tensor g_up2 = u1_.backward(ps_, k.up2, g_u1a, grads);
  Tensor g_u2 = upsample2x_backward(g_up2);

  silu_backward_inplace(g_u2, k.u2_pre);
  Tensor g_cat2 = f2_.backward(ps_, k.cat2, g_u2, grads);
  Tensor g_u2a, g_h2_skip;
  split(g_cat2, cfg_.c2, g_u2a, g_h2_skip);
  silu_backward_inplace(g_u2a, k.u2a_pre);
  Tensor g_up3 = u2_.backward(ps_, k.up3, g_u2a, grads);
  Tensor g_h3 = upsample2x_backward(g_up3);

  silu_backward_inplace(g_h3, k.h3_pre);
  collect_bias(g_h3, cfg_.c1 + cfg_.c2);
  Tensor g_h3a = m_.backward(ps_, k.h3a, g_h3, grads);
  silu_backward_inplace(g_h3a, k.h3a_pre);
  Tensor g_h2 = d2_.backward(ps_, k.h2, g_h3a, grads);
  for (std::size_t i = 0; i < g_h2.v.size(); ++i) g_h2.v[i] += g_h2_skip.v[i];

  silu_backward_inplace(g_h2, k.h2_pre);
  collect_bias(g_h2, cfg_.c1);
  Tensor g_h2a = e2_.backward(ps_, k.h2a, g_h2, grads);
  silu_backward_inplace(g_h2a, k.h2a_pre);
  Tensor g_h1 = d1_.backward(ps_, k.h1, g_h2a, grads);
  for (std::size_t i = 0; i < g_h1.v.size(); ++i) g_h1.v[i] += g_h1_skip.v[i];

  silu_backward_inplace(g_h1, k.h1_pre);
  collect_bias(g_h1, 0);
  Tensor g_h1a = e1b_.backward(ps_, k.h1a, g_h1, grads);
  silu_backward_inplace(g_h1a, k.h1a_pre);
  Tensor g_x = e1a_.backward(ps_, k.x, g_h1a, grads);

  if (cfg_.time_conditioned && grads) {
    std::vector<double> g_act = tb_.backward(ps_, k.emb_act, gbias, grads);
    for (std::size_t i = 0; i < g_act.size(); ++i) g_act[i] *= silu_grad(k.emb_pre[i]);
    t1_.backward(ps_, k.emb, g_act, grads);
  }
  return g_x;
}

}  // namespace diip::nn
