#include "diip/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace diip {

ImageShape shape_of(const Image& img) { return {img.height(), img.width(), img.channels()}; }

void GMMModel::validate() const {
  if (means.empty()) throw Error("GMM needs at least one component");
  if (variances.size() != means.size() || weights.size() != means.size()) {
    throw Error("GMM component arrays differ in length");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (!means[k].same_shape(means[0])) throw Error("GMM means differ in shape");
    if (!(variances[k] >= 0.0)) throw Error("GMM variance must be nonnegative");
    if (!(weights[k] >= 0.0)) throw Error("GMM weight must be nonnegative");
    total += weights[k];
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error("GMM weights must sum to 1");
}

AnalyticGMMDenoiser::AnalyticGMMDenoiser(GMMModel gmm, NoiseSchedule sched)
    : gmm_(std::move(gmm)), sched_(std::move(sched)) {
  gmm_.validate();
}

ImageShape AnalyticGMMDenoiser::shape() const { return shape_of(gmm_.means.front()); }

namespace {

struct Posterior {
  std::vector<double> resp;      // r_k
  std::vector<double> inv_var;   // 1 / s_k^2
  std::vector<double> shrink;    // sqrt(ab) sigma_k^2 / s_k^2
  Image mean;                    // E[x0 | z_t]
};

Posterior compute_posterior(const GMMModel& gmm, const Image& z, double ab) {
  const std::size_t K = gmm.size();
  const double sqrt_ab = std::sqrt(ab);
  const double dim = static_cast<double>(z.size());
  Posterior p;
  p.resp.resize(K);
  p.inv_var.resize(K);
  p.shrink.resize(K);
  std::vector<double> logit(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double s2 = ab * gmm.variances[k] + (1.0 - ab);
    p.inv_var[k] = 1.0 / s2;
    p.shrink[k] = sqrt_ab * gmm.variances[k] / s2;
    const Image& mu = gmm.means[k];
    double d2 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      const double d = z[i] - sqrt_ab * mu[i];
      d2 += d * d;
    }
    logit[k] = (gmm.weights[k] > 0.0 ? std::log(gmm.weights[k]) : -INFINITY) -
               0.5 * dim * std::log(2.0 * std::numbers::pi * s2) - 0.5 * d2 / s2;
  }
  const double mx = *std::max_element(logit.begin(), logit.end());
  double z_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    p.resp[k] = std::exp(logit[k] - mx);
    z_sum += p.resp[k];
  }
  for (double& r : p.resp) r /= z_sum;

  p.mean = Image(z.height(), z.width(), z.channels());
  for (std::size_t k = 0; k < K; ++k) {
    const double r = p.resp[k];
    if (r == 0.0) continue;
    const Image& mu = gmm.means[k];
    const double c = p.shrink[k];
    for (std::size_t i = 0; i < z.size(); ++i) {
      p.mean[i] += r * (mu[i] + c * (z[i] - sqrt_ab * mu[i]));
    }
  }
  return p;
}

}  // namespace

Image AnalyticGMMDenoiser::posterior_mean(const Image& z_t, int t, std::vector<double>* resp) const {
  if (shape_of(z_t) != shape()) throw Error("analytic denoiser: latent shape mismatch");
  Posterior p = compute_posterior(gmm_, z_t, sched_.alpha_bar(t));
  if (resp) *resp = p.resp;
  return p.mean;
}

Image AnalyticGMMDenoiser::eval(const Image& z_t, int t) const {
  if (t < 1) throw Error("denoiser requires t >= 1");
  const double ab = sched_.alpha_bar(t);
  const Image m = posterior_mean(z_t, t);
  return axpby(1.0 / std::sqrt(1.0 - ab), z_t, -std::sqrt(ab) / std::sqrt(1.0 - ab), m);
}

EpsWithPullback AnalyticGMMDenoiser::eval_with_pullback(const Image& z_t, int t) const {
  if (t < 1) throw Error("denoiser requires t >= 1");
  if (shape_of(z_t) != shape()) throw Error("analytic denoiser: latent shape mismatch");
  const double ab = sched_.alpha_bar(t);
  auto post = std::make_shared<Posterior>(compute_posterior(gmm_, z_t, ab));
  const double a = 1.0 / std::sqrt(1.0 - ab);
  const double b = -std::sqrt(ab) / std::sqrt(1.0 - ab);
  EpsWithPullback out{axpby(a, z_t, b, post->mean), {}};
  // d m / d z = sum_k r_k c_k I + sum_k m_k grad(r_k)^T, grad r_k = r_k (g_k - sum_j r_j g_j),
  // g_k = -(z - sqrt(ab) mu_k) / s_k^2.
  out.pullback = [this, post, z = z_t, ab, a, b](const Image& v) {
    const std::size_t K = gmm_.size();
    const double sqrt_ab = std::sqrt(ab);
    Image jt_v(v.height(), v.width(), v.channels());
    std::vector<double> vm(K, 0.0);
    double diag = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double r = post->resp[k];
      if (r == 0.0) continue;
      diag += r * post->shrink[k];
      const Image& mu = gmm_.means[k];
      const double c = post->shrink[k];
      double s = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) s += v[i] * (mu[i] + c * (z[i] - sqrt_ab * mu[i]));
      vm[k] = s;
    }
    double vm_bar = 0.0;
    for (std::size_t k = 0; k < K; ++k) vm_bar += post->resp[k] * vm[k];
    for (std::size_t i = 0; i < z.size(); ++i) jt_v[i] = diag * v[i];
    // sum_k r_k (vm_k - vm_bar) g_k; the g_bar term cancels because sum_k r_k (vm_k - vm_bar) = 0.
    for (std::size_t k = 0; k < K; ++k) {
      const double w = post->resp[k] * (vm[k] - vm_bar);
      if (w == 0.0) continue;
      const double scale = -w * post->inv_var[k];
      const Image& mu = gmm_.means[k];
      for (std::size_t i = 0; i < z.size(); ++i) jt_v[i] += scale * (z[i] - sqrt_ab * mu[i]);
    }
    return axpby(a, v, b, jt_v);
  };
  return out;
}

Image analytic_gmm_eps(const Image& z_t, int t, const GMMModel& gmm, const NoiseSchedule& sched) {
  return AnalyticGMMDenoiser(gmm, sched).eval(z_t, t);
}

}  // namespace diip
