#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "diip/cli.hpp"
#include "diip/datasets.hpp"
#include "diip/inversion.hpp"
#include "diip/rng.hpp"
#include "diip/stopping.hpp"

using namespace diip;

namespace {

struct Fixture {
  NoiseSchedule sched = make_schedule();
  AnalyticGMMDenoiser den{make_random_gmm({4, 4, 1}, 3, 0.05, 21), sched};
  DdimSampler g{den, sched};
};

/// Returns NaN once the input leaves a small ball.
class FragileDenoiser final : public Denoiser {
 public:
  ImageShape shape() const override { return {4, 4, 1}; }
  Image eval(const Image& z, int) const override {
    Image out = z * 0.5;
    if (squared_norm(z) > 40.0) out[0] = std::nan("");
    return out;
  }
  EpsWithPullback eval_with_pullback(const Image& z, int t) const override {
    return {eval(z, t), [](const Image& g) { return g * 0.5; }};
  }
};

struct HaltAt final : InversionObserver {
  long at;
  explicit HaltAt(long k) : at(k) {}
  bool observe(Trajectory&, const TrajectoryRecord& r) override { return r.k == at; }
};

}  // namespace

TEST_CASE("reconstruction gradient matches finite differences") {
  Fixture f;
  Philox rng(3);
  const Image z = normal_image(4, 4, 1, rng), y = normal_image(4, 4, 1, rng, 0.3) + Image(4, 4, 1, 0.5);
  const LossAndGrad lg = recon_loss(z, y, f.g);
  CHECK(lg.loss == doctest::Approx(sum_squared_diff(f.g.generate(z), y)).epsilon(1e-14));
  for (std::size_t i = 0; i < z.size(); ++i) {
    Image zp = z, zm = z;
    zp[i] += 1e-5;
    zm[i] -= 1e-5;
    const double fd = (sum_squared_diff(f.g.generate(zp), y) - sum_squared_diff(f.g.generate(zm), y)) / 2e-5;
    CHECK(std::abs(fd - lg.grad[i]) <= 1e-5 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("inversion is deterministic and the reference never steers it") {
  Fixture f;
  const Image y = f.g.generate(init_latent({4, 4, 1}, 77).z);
  InversionConfig cfg;
  cfg.max_iters = 40;
  cfg.lr = 0.05;
  const InversionRun a = run_inversion(y, f.g, cfg);
  const Image ref(4, 4, 1, 0.5);
  const InversionRun b = run_inversion(y, f.g, cfg, {}, &ref);
  REQUIRE(a.trajectory.size() == 41);
  REQUIRE(b.trajectory.size() == 41);
  CHECK(a.final_latent.z == b.final_latent.z);
  for (long k = 0; k <= 40; ++k) {
    CHECK(a.trajectory.at(k).loss == b.trajectory.at(k).loss);
    CHECK(a.trajectory.at(k).lap_var == b.trajectory.at(k).lap_var);
    CHECK(!a.trajectory.at(k).psnr_ref.has_value());
    CHECK(b.trajectory.at(k).psnr_ref.has_value());
  }
  CHECK(a.trajectory.at(40).loss < a.trajectory.at(0).loss);
  // Record k holds g(z_k) for the k-th latent, so loss[0] is the initial fit.
  CHECK(a.trajectory.at(0).loss == sum_squared_diff(f.g.generate(init_latent({4, 4, 1}, 0).z), y));
}

TEST_CASE("observers can halt the run") {
  Fixture f;
  InversionConfig cfg;
  cfg.max_iters = 100;
  HaltAt h(7);
  const InversionRun r = run_inversion(Image(4, 4, 1, 0.5), f.g, cfg, {&h});
  CHECK(r.trajectory.size() == 8);
}

TEST_CASE("non-finite values abort with a recorded failure") {
  FragileDenoiser den;
  const DdimSampler g(den, make_schedule());
  InversionConfig cfg;
  cfg.max_iters = 500;
  cfg.lr = 0.5;
  const InversionRun r = run_inversion(Image(4, 4, 1, 1e3), g, cfg);
  REQUIRE(r.trajectory.failure.has_value());
  CHECK(r.trajectory.size() < 501);
  RestoreConfig rc;
  rc.inversion = cfg;
  CHECK_THROWS_AS(diip_restore(Image(4, 4, 1, 1e3), g, rc), NumericalError);
}

TEST_CASE("restore returns the snapshot and record of n*") {
  Fixture f;
  const Image y = f.g.generate(init_latent({4, 4, 1}, 5).z);
  RestoreConfig rc;
  rc.inversion.max_iters = 150;
  rc.inversion.lr = 0.02;
  rc.stop.k_min = 20;
  const RestoreResult r = diip_restore(y, f.g, rc);
  const auto& at = r.trajectory.at(r.report.n_star);
  CHECK(r.report.loss_at_stop == at.loss);
  CHECK(r.report.lap_var_at_stop == at.lap_var);
  CHECK(laplacian_variance(r.x_hat) == doctest::Approx(at.lap_var).epsilon(1e-12));
  CHECK(sum_squared_diff(r.x_hat, y) == doctest::Approx(at.loss).epsilon(1e-12));
  CHECK(r.report.config_hash == config_hash(rc.canonical()));
  if (r.report.criterion != Criterion::None) CHECK(r.report.iters_run == r.trajectory.size() - 1);

  // Running on to N leaves the decision untouched.
  RestoreConfig full = rc;
  full.run_to_end = true;
  const RestoreResult f2 = diip_restore(y, f.g, full);
  CHECK(f2.trajectory.size() == 151);
  CHECK(f2.report.n_star == r.report.n_star);
  CHECK(f2.report.criterion == r.report.criterion);
  CHECK(f2.x_hat == r.x_hat);
}

TEST_CASE("cli: usage errors exit with 2 and configs are echoed") {
  namespace fs = std::filesystem;
  CHECK(run_cli({}) == 2);
  CHECK(run_cli({"frobnicate"}) == 2);
  CHECK(run_cli({"restore", "--out", "x"}) == 2);
  CHECK(run_cli({"--version"}) == 0);
  const fs::path dir = fs::temp_directory_path() / "diip_test_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);
  CHECK(run_cli({"report", "--trajectory", (dir / "missing.csv").string(), "--out", dir.string()}) == 2);
  {
    std::ofstream(dir / "empty.csv") << "k,loss,delta_k,lap_var,psnr_ref\n";
  }
  CHECK(run_cli({"report", "--trajectory", (dir / "empty.csv").string(), "--out", dir.string()}) == 2);

  {
    std::ofstream(dir / "cfg.ini") << "# comment\ncount = 3\nspec = gaussian_noise:sigma=0.2\nseed = 4\n";
  }
  const fs::path out = dir / "bench";
  REQUIRE(run_cli({"degrade", "--config", (dir / "cfg.ini").string(), "--out", out.string(), "--count", "2"}) == 0);
  CHECK(fs::exists(out / "clean_1.dimg"));
  CHECK(!fs::exists(out / "clean_2.dimg"));  // command line beats the file
  std::ifstream ec(out / "effective_config.ini");
  std::string all((std::istreambuf_iterator<char>(ec)), {});
  CHECK(all.find("count = 2") != std::string::npos);
  CHECK(all.find("seed = 4") != std::string::npos);
  CHECK(all.find("spec = gaussian_noise:sigma=0.2") != std::string::npos);
  CHECK(run_cli({"degrade", "--out", out.string(), "--spec", "bogus"}) == 2);
  fs::remove_all(dir);
}

TEST_CASE("flat config parser") {
  namespace fs = std::filesystem;
  const fs::path p = fs::temp_directory_path() / "diip_flat.ini";
  {
    std::ofstream(p) << "a = 1\n\n  # skip\nb=\"x y\"\n";
  }
  const auto kv = read_flat_config(p.string());
  REQUIRE(kv.size() == 2u);
  CHECK(kv[1].first == "b");
  CHECK(kv[1].second == "x y");
  {
    std::ofstream(p) << "novalue\n";
  }
  CHECK_THROWS_AS(read_flat_config(p.string()), Error);
  fs::remove(p);
}
