#include <cmath>
#include <sstream>

#include "doctest.h"
#include "diip/adam.hpp"
#include "diip/conv_denoiser.hpp"
#include "diip/datasets.hpp"
#include "diip/rng.hpp"
#include "diip/sampler.hpp"
#include "diip/train.hpp"

using namespace diip;

namespace {

Image scalar(double v) { return Image(1, 1, 1, v); }

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

}  // namespace

TEST_CASE("alpha_bar matches a long-double product and reference digits") {
  const NoiseSchedule s = make_schedule();
  long double ab = 1;
  for (int t = 1; t <= 1000; ++t) {
    ab *= 1.0L - (1e-4L + (0.02L - 1e-4L) * (t - 1) / 999.0L);
    CHECK(rel_err(s.alpha_bar(t), static_cast<double>(ab)) <= 1e-12);
  }
  // 40-digit reference values.
  CHECK(s.alpha_bar(0) == 1.0);
  CHECK(std::abs(s.alpha_bar(1) - 0.9999) <= 1e-15);
  CHECK(std::abs(s.alpha_bar(100) - 0.89701814567496036372) <= 1e-12);
  CHECK(std::abs(s.alpha_bar(500) - 0.078587242881778237343) <= 1e-12);
  CHECK(std::abs(s.alpha_bar(1000) - 0.000040358297653756833148) <= 1e-12);
  CHECK_THROWS_AS(s.alpha_bar(1001), Error);
  CHECK_THROWS_AS(NoiseSchedule(1000, 0.02, 1e-4), Error);
}

TEST_CASE("ddim step and x0 estimate against hand-computed scalars") {
  const NoiseSchedule s = make_schedule();
  CHECK(std::abs(ddim_step(scalar(0.7), scalar(0.3), 1000, 100, s)[0] - 0.70298897295846593492) <= 1e-12);
  CHECK(std::abs(ddim_step(scalar(0.7), scalar(0.3), 200, 100, s)[0] - 0.53499058885650771555) <= 1e-12);
  CHECK(std::abs(x0_hat_from(scalar(0.7), scalar(-0.4), 500, s)[0] - 3.8666746069051659198) <= 1e-12);
  // Collapsing the whole chain into one step returns the clean estimate exactly.
  Philox rng(1);
  const Image z = normal_image(4, 4, 1, rng), x0 = normal_image(4, 4, 1, rng);
  CHECK(ddim_step(z, x0, 1000, 1000, s) == x0);
  CHECK_THROWS_AS(ddim_step(z, x0, 100, 200, s), Error);
}

TEST_CASE("x0 estimate inverts forward diffusion") {
  const NoiseSchedule s = make_schedule();
  Philox rng(2);
  const Image x0 = normal_image(3, 3, 1, rng), n = normal_image(3, 3, 1, rng);
  for (int t : {1, 100, 700, 1000}) {
    const Image back = x0_hat_from(forward_diffuse(x0, t, n, s), n, t, s);
    for (std::size_t i = 0; i < x0.size(); ++i) CHECK(std::abs(back[i] - x0[i]) <= 1e-9);
  }
}

TEST_CASE("gmm denoiser with one component is the Gaussian posterior") {
  const NoiseSchedule s = make_schedule();
  GMMModel g;
  g.means = {Image(2, 2, 1, std::vector<double>{0.2, 0.4, 0.6, 0.8})};
  g.variances = {0.01};
  g.weights = {1.0};
  const AnalyticGMMDenoiser den(g, s);
  Philox rng(4);
  const Image z = normal_image(2, 2, 1, rng);
  for (int t : {1, 300, 1000}) {
    const double ab = s.alpha_bar(t);
    const Image post = den.posterior_mean(z, t);
    for (std::size_t i = 0; i < z.size(); ++i) {
      // x0 | z ~ N(mu + v sqrt(ab) (z - sqrt(ab) mu) / (ab v + 1 - ab), ...)
      const double mu = g.means[0][i], v = 0.01;
      const double ref = mu + v * std::sqrt(ab) * (z[i] - std::sqrt(ab) * mu) / (ab * v + 1 - ab);
      CHECK(std::abs(post[i] - ref) <= 1e-12);
    }
  }
}

TEST_CASE("gmm eps pullback matches finite differences") {
  const NoiseSchedule s = make_schedule();
  const AnalyticGMMDenoiser den(make_random_gmm({3, 3, 1}, 4, 0.1, 7), s);
  Philox rng(8);
  const Image z = normal_image(3, 3, 1, rng, 0.5), w = normal_image(3, 3, 1, rng);
  for (int t : {100, 500, 1000}) {
    const EpsWithPullback e = den.eval_with_pullback(z, t);
    const Image vjp = e.pullback(w);
    for (std::size_t i = 0; i < z.size(); ++i) {
      Image zp = z, zm = z;
      zp[i] += 1e-6;
      zm[i] -= 1e-6;
      const double fd = (dot(den.eval(zp, t), w) - dot(den.eval(zm, t), w)) / 2e-6;
      CHECK(std::abs(fd - vjp[i]) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("sampler is deterministic and pullback matches finite differences") {
  const NoiseSchedule s = make_schedule();
  const AnalyticGMMDenoiser den(make_random_gmm({2, 2, 1}, 3, 0.2, 9), s);
  const DdimSampler g(den, s);
  Philox rng(10);
  const Image z = normal_image(2, 2, 1, rng), w = normal_image(2, 2, 1, rng);
  CHECK(g.generate(z) == ddim_generate(z, den, s));
  DdimSampler::Tape tape;
  CHECK(g.generate(z, tape) == g.generate(z));
  CHECK(tape.times.size() == 10u);
  const Image vjp = g.pullback(tape, w);
  for (std::size_t i = 0; i < z.size(); ++i) {
    Image zp = z, zm = z;
    zp[i] += 1e-5;
    zm[i] -= 1e-5;
    const double fd = (dot(g.generate(zp), w) - dot(g.generate(zm), w)) / 2e-5;
    CHECK(std::abs(fd - vjp[i]) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("unet input and weight gradients match finite differences") {
  nn::UNetConfig cfg;
  cfg.c1 = 2;
  cfg.c2 = 3;
  cfg.c3 = 4;
  cfg.embed_dim = 8;
  cfg.embed_hidden = 6;
  nn::UNet net(cfg);
  net.init(3);
  Philox rng(12);
  const nn::Tensor x = nn::from_image(normal_image(4, 4, 1, rng));
  const nn::Tensor w = nn::from_image(normal_image(4, 4, 1, rng));
  auto objective = [&](const nn::UNet& n, const nn::Tensor& in) {
    const nn::Tensor o = n.forward(in, 300);
    double acc = 0;
    for (std::size_t i = 0; i < o.size(); ++i) acc += o.v[i] * w.v[i];
    return acc;
  };
  nn::UNet::Cache cache;
  net.forward(x, 300, &cache);
  net.params().zero_grad();
  const nn::Tensor gx = net.backward(cache, w, &net.params());
  for (std::size_t i = 0; i < x.size(); ++i) {
    nn::Tensor xp = x, xm = x;
    xp.v[i] += 1e-6;
    xm.v[i] -= 1e-6;
    const double fd = (objective(net, xp) - objective(net, xm)) / 2e-6;
    CHECK(std::abs(fd - gx.v[i]) <= 1e-7 * std::max(1.0, std::abs(fd)));
  }
  for (auto& p : net.params().all()) {
    for (std::size_t j = 0; j < p.numel(); j += 7) {
      const double keep = p.value[j];
      p.value[j] = keep + 1e-6;
      const double fp = objective(net, x);
      p.value[j] = keep - 1e-6;
      const double fm = objective(net, x);
      p.value[j] = keep;
      const double fd = (fp - fm) / 2e-6;
      INFO(p.name << "[" << j << "]");
      CHECK(std::abs(fd - p.grad[j]) <= 1e-7 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("conv denoiser checkpoint round trip is exact") {
  nn::UNetConfig cfg;
  cfg.c1 = 4;
  cfg.c2 = 4;
  cfg.c3 = 8;
  nn::UNet net(cfg);
  net.init(5);
  quantize_to_float(net.params());
  ConvDenoiser den(std::move(net), make_schedule(), {8, 8, 1});
  std::stringstream ss;
  write_checkpoint(ss, to_checkpoint(den, {"shapes:test", 12, 77}));
  const Checkpoint ck = read_checkpoint(ss);
  const ConvDenoiser back = from_checkpoint(ck);
  CHECK(training_meta(ck).iterations == 12);
  CHECK(training_meta(ck).seed == 77u);
  CHECK(back.shape() == den.shape());
  CHECK(back.schedule().alpha_bars() == den.schedule().alpha_bars());
  Philox rng(6);
  const Image z = normal_image(8, 8, 1, rng);
  CHECK(back.eval(z, 400) == den.eval(z, 400));

  std::string bytes = ss.str();
  bytes[0] = 'X';
  std::stringstream bad(bytes);
  CHECK_THROWS_AS(read_checkpoint(bad), Error);
}

TEST_CASE("adam matches the closed-form first steps") {
  AdamState st(AdamConfig{0.1, 0.9, 0.999, 1e-8}, 1);
  std::vector<double> x{1.0};
  std::vector<double> g{0.5};
  adam_update(x, g, st);
  // Bias-corrected moments equal g and g^2 after one step: move = lr * sign(g).
  CHECK(std::abs(x[0] - (1.0 - 0.1 * 0.5 / (0.5 + 1e-8))) <= 1e-15);
  g[0] = -2.0;
  adam_update(x, g, st);
  const double m = (0.9 * 0.05 + 0.1 * -2.0) / (1 - 0.81);
  const double v = (0.999 * 0.00025 + 0.001 * 4.0) / (1 - 0.999 * 0.999);
  CHECK(std::abs(x[0] - (1.0 - 0.1 * 0.5 / (0.5 + 1e-8) - 0.1 * m / (std::sqrt(v) + 1e-8))) <= 1e-14);
}

TEST_CASE("training lowers the denoising loss") {
  nn::UNetConfig cfg;
  cfg.c1 = 4;
  cfg.c2 = 8;
  cfg.c3 = 8;
  nn::UNet net(cfg);
  net.init(1);
  ConvDenoiser den(std::move(net), make_schedule(), {4, 4, 1});
  GmmDataset data(make_random_gmm({4, 4, 1}, 2, 0.05, 3), 4);
  TrainConfig tc;
  tc.iters = 150;
  tc.batch = 8;
  tc.t_stride = 100;
  std::vector<double> losses;
  train_denoiser(den, data, tc, [&](long, double l) { losses.push_back(l); });
  REQUIRE(losses.size() == 150u);
  double head = 0, tail = 0;
  for (int i = 0; i < 20; ++i) {
    head += losses[static_cast<std::size_t>(i)];
    tail += losses[losses.size() - 1 - static_cast<std::size_t>(i)];
  }
  CHECK(tail < 0.7 * head);
  for (const auto& p : den.net().params().all())
    for (double v : p.value) CHECK(v == static_cast<double>(static_cast<float>(v)));
}

TEST_CASE("gmm posterior mean matches direct summation over components") {
  const NoiseSchedule s = make_schedule();
  GMMModel g = make_random_gmm({4, 4, 1}, 3, 0.3, 17);
  g.weights = {0.2, 0.5, 0.3};
  const AnalyticGMMDenoiser den(g, s);
  Philox rng(18);
  for (int t : {300, 600, 900}) {
    const double ab = s.alpha_bar(t);
    const Image z = normal_image(4, 4, 1, rng, 0.5) + g.means[1] * std::sqrt(ab);
    const double var = ab * 0.09 + 1 - ab;
    std::vector<double> dens(3);
    double total = 0;
    for (int k = 0; k < 3; ++k) {
      double d2 = 0;
      for (std::size_t i = 0; i < z.size(); ++i) d2 += std::pow(z[i] - std::sqrt(ab) * g.means[k][i], 2);
      dens[k] = g.weights[k] * std::pow(2 * M_PI * var, -8.0) * std::exp(-0.5 * d2 / var);
      total += dens[k];
    }
    const Image post = den.posterior_mean(z, t);
    for (std::size_t i = 0; i < z.size(); ++i) {
      double ref = 0;
      for (int k = 0; k < 3; ++k) {
        const double mk = g.means[k][i] + 0.09 * std::sqrt(ab) * (z[i] - std::sqrt(ab) * g.means[k][i]) / var;
        ref += dens[k] / total * mk;
      }
      CHECK(std::abs(post[i] - ref) <= 1e-8);
    }
  }
}
