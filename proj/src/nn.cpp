#include "diip/nn.hpp"

#include <Eigen/Core>
#include <cmath>

#include "diip/rng.hpp"

namespace diip::nn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

Tensor from_image(const Image& img) {
  Tensor t(img.channels(), img.height(), img.width());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c) t.channel(c)[y * t.w + x] = img.at(y, x, c);
  return t;
}

Image to_image(const Tensor& t) {
  Image img(t.h, t.w, t.c);
  for (int y = 0; y < t.h; ++y)
    for (int x = 0; x < t.w; ++x)
      for (int c = 0; c < t.c; ++c) img.at(y, x, c) = t.channel(c)[y * t.w + x];
  return img;
}

std::size_t ParamStore::add(std::string name, std::vector<int> shape) {
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  params_.push_back(Param{std::move(name), std::move(shape), std::vector<double>(n, 0.0),
                          std::vector<double>(n, 0.0)});
  return params_.size() - 1;
}

std::size_t ParamStore::numel() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.numel();
  return n;
}

Param* ParamStore::find(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

const Param* ParamStore::find(const std::string& name) const {
  for (const auto& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

void ParamStore::zero_grad() {
  for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), 0.0);
}

namespace {

int out_extent(int n, int k, int stride) { return (n + 2 * (k / 2) - k) / stride + 1; }

// cols: (cin*k*k) x (ho*wo), zero padding k/2.
RowMat im2col(const Tensor& x, int k, int stride, int ho, int wo) {
  const int pad = k / 2;
  RowMat cols(static_cast<Eigen::Index>(x.c) * k * k, static_cast<Eigen::Index>(ho) * wo);
  for (int c = 0; c < x.c; ++c) {
    const double* src = x.channel(c);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols.row((c * k + ky) * k + kx).data();
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= x.h) {
            std::fill(row + oy * wo, row + (oy + 1) * wo, 0.0);
            continue;
          }
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            row[oy * wo + ox] = (ix >= 0 && ix < x.w) ? src[iy * x.w + ix] : 0.0;
          }
        }
      }
    }
  }
  return cols;
}

Tensor col2im(const RowMat& cols, int c, int h, int w, int k, int stride, int ho, int wo) {
  const int pad = k / 2;
  Tensor x(c, h, w);
  for (int ch = 0; ch < c; ++ch) {
    double* dst = x.channel(ch);
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols.row((ch * k + ky) * k + kx).data();
        for (int oy = 0; oy < ho; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          for (int ox = 0; ox < wo; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) dst[iy * w + ix] += row[oy * wo + ox];
          }
        }
      }
    }
  }
  return x;
}

}  // namespace

Conv2d Conv2d::make(ParamStore& ps, const std::string& name, int cin, int cout, int k, int stride) {
  Conv2d c;
  c.cin = cin;
  c.cout = cout;
  c.k = k;
  c.stride = stride;
  c.weight = ps.add(name + ".weight", {cout, cin, k, k});
  c.bias = ps.add(name + ".bias", {cout});
  return c;
}

Tensor Conv2d::forward(const ParamStore& ps, const Tensor& x) const {
  if (x.c != cin) throw Error("conv2d: channel mismatch");
  const int ho = out_extent(x.h, k, stride), wo = out_extent(x.w, k, stride);
  const RowMat cols = im2col(x, k, stride, ho, wo);
  Tensor y(cout, ho, wo);
  CMapMat wm(ps[weight].value.data(), cout, static_cast<Eigen::Index>(cin) * k * k);
  MapMat ym(y.v.data(), cout, static_cast<Eigen::Index>(ho) * wo);
  ym.noalias() = wm * cols;
  const auto& b = ps[bias].value;
  for (int o = 0; o < cout; ++o) ym.row(o).array() += b[o];
  return y;
}

Tensor Conv2d::backward(const ParamStore& ps, const Tensor& x, const Tensor& grad_out,
                        ParamStore* grads) const {
  const int ho = grad_out.h, wo = grad_out.w;
  CMapMat gm(grad_out.v.data(), cout, static_cast<Eigen::Index>(ho) * wo);
  CMapMat wm(ps[weight].value.data(), cout, static_cast<Eigen::Index>(cin) * k * k);
  if (grads) {
    const RowMat cols = im2col(x, k, stride, ho, wo);
    MapMat gw((*grads)[weight].grad.data(), cout, static_cast<Eigen::Index>(cin) * k * k);
    gw.noalias() += gm * cols.transpose();
    auto& gb = (*grads)[bias].grad;
    for (int o = 0; o < cout; ++o) gb[o] += gm.row(o).sum();
  }
  const RowMat gcols = wm.transpose() * gm;
  return col2im(gcols, cin, x.h, x.w, k, stride, ho, wo);
}

Linear Linear::make(ParamStore& ps, const std::string& name, int in, int out) {
  Linear l;
  l.in = in;
  l.out = out;
  l.weight = ps.add(name + ".weight", {out, in});
  l.bias = ps.add(name + ".bias", {out});
  return l;
}

std::vector<double> Linear::forward(const ParamStore& ps, const std::vector<double>& x) const {
  std::vector<double> y(ps[bias].value);
  const auto& w = ps[weight].value;
  for (int o = 0; o < out; ++o)
    for (int i = 0; i < in; ++i) y[o] += w[static_cast<std::size_t>(o) * in + i] * x[i];
  return y;
}

std::vector<double> Linear::backward(const ParamStore& ps, const std::vector<double>& x,
                                     const std::vector<double>& grad_out,
                                     ParamStore* grads) const {
  std::vector<double> gx(in, 0.0);
  const auto& w = ps[weight].value;
  for (int o = 0; o < out; ++o) {
    for (int i = 0; i < in; ++i) gx[i] += w[static_cast<std::size_t>(o) * in + i] * grad_out[o];
  }
  if (grads) {
    auto& gw = (*grads)[weight].grad;
    auto& gb = (*grads)[bias].grad;
    for (int o = 0; o < out; ++o) {
      gb[o] += grad_out[o];
      for (int i = 0; i < in; ++i) gw[static_cast<std::size_t>(o) * in + i] += grad_out[o] * x[i];
    }
  }
  return gx;
}

double silu(double a) { return a / (1.0 + std::exp(-a)); }

double silu_grad(double a) {
  const double s = 1.0 / (1.0 + std::exp(-a));
  return s * (1.0 + a * (1.0 - s));
}

void silu_inplace(Tensor& t) {
  for (double& v : t.v) v = silu(v);
}

void silu_backward_inplace(Tensor& grad, const Tensor& pre) {
  for (std::size_t i = 0; i < grad.v.size(); ++i) grad.v[i] *= silu_grad(pre.v[i]);
}

Tensor upsample2x(const Tensor& x) {
  Tensor y(x.c, 2 * x.h, 2 * x.w);
  for (int c = 0; c < x.c; ++c) {
    const double* s = x.channel(c);
    double* d = y.channel(c);
    for (int yy = 0; yy < y.h; ++yy)
      for (int xx = 0; xx < y.w; ++xx) d[yy * y.w + xx] = s[(yy / 2) * x.w + xx / 2];
  }
  return y;
}

Tensor upsample2x_backward(const Tensor& grad) {
  Tensor g(grad.c, grad.h / 2, grad.w / 2);
  for (int c = 0; c < grad.c; ++c) {
    const double* s = grad.channel(c);
    double* d = g.channel(c);
    for (int yy = 0; yy < grad.h; ++yy)
      for (int xx = 0; xx < grad.w; ++xx) d[(yy / 2) * g.w + xx / 2] += s[yy * grad.w + xx];
  }
  return g;
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.h != b.h || a.w != b.w) throw Error("concat: spatial mismatch");
  Tensor y(a.c + b.c, a.h, a.w);
  std::copy(a.v.begin(), a.v.end(), y.v.begin());
  std::copy(b.v.begin(), b.v.end(), y.v.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return y;
}

void split(const Tensor& g, int ca, Tensor& ga, Tensor& gb) {
  ga = Tensor(ca, g.h, g.w);
  gb = Tensor(g.c - ca, g.h, g.w);
  std::copy(g.v.begin(), g.v.begin() + static_cast<std::ptrdiff_t>(ga.size()), ga.v.begin());
  std::copy(g.v.begin() + static_cast<std::ptrdiff_t>(ga.size()), g.v.end(), gb.v.begin());
}

void add_channel_bias(Tensor& t, const double* bias) {
  for (int c = 0; c < t.c; ++c) {
    double* p = t.channel(c);
    for (std::size_t i = 0; i < t.plane(); ++i) p[i] += bias[c];
  }
}

std::vector<double> time_embedding(int t, int dim) {
  const int half = dim / 2;
  std::vector<double> e(static_cast<std::size_t>(dim));
  for (int i = 0; i < half; ++i) {
    const double f = std::exp(-std::log(10000.0) * i / half);
    e[i] = std::sin(t * f);
    e[half + i] = std::cos(t * f);
  }
  return e;
}

void init_params(ParamStore& ps, std::uint64_t seed) {
  Philox rng(seed, 0x1417);
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Param& p = ps[i];
    // weights are [out, in, ...]; biases share the fan-in of the preceding weight
    const bool is_weight = p.shape.size() >= 2;
    std::size_t fan_in = 1;
    if (is_weight) {
      for (std::size_t d = 1; d < p.shape.size(); ++d) fan_in *= static_cast<std::size_t>(p.shape[d]);
    } else if (i > 0) {
      const Param& w = ps[i - 1];
      for (std::size_t d = 1; d < w.shape.size(); ++d) fan_in *= static_cast<std::size_t>(w.shape[d]);
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : p.value) v = bound * (2.0 * rng.uniform() - 1.0);
  }
}

}  // namespace diip::nn
