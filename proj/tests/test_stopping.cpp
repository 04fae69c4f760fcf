#include <cmath>
#include <sstream>

#include "doctest.h"
#include "diip/rng.hpp"
#include "diip/stopping.hpp"

using namespace diip;

namespace {

struct Series {
  std::vector<double> lap, loss;
};

/// Random walk sharpness and a positive, noisy, mostly decreasing loss.
Series random_series(std::uint64_t seed, long n) {
  Philox rng(seed);
  Series s;
  double lap = 1.0, loss = 10.0;
  const double drift = rng.uniform() - 0.5;
  for (long k = 0; k <= n; ++k) {
    s.lap.push_back(lap);
    s.loss.push_back(loss);
    lap = std::max(1e-6, lap + 0.05 * (drift + rng.normal()));
    loss *= 1.0 - 0.02 * rng.uniform() + 0.001 * rng.normal();
  }
  return s;
}

Trajectory to_trajectory(const Series& s, int window, bool with_images) {
  Trajectory t(window);
  for (std::size_t k = 0; k < s.lap.size(); ++k) {
    TrajectoryRecord r;
    r.k = static_cast<long>(k);
    r.loss = s.loss[k];
    r.lap_var = s.lap[k];
    if (k > 0) r.delta_k = normalized_slope(s.loss[k - 1], s.loss[k]);
    if (with_images) {
      t.append(r, Image(1, 1, 1, static_cast<double>(k)));
    } else {
      t.append_record(r);
    }
  }
  return t;
}

}  // namespace

TEST_CASE("normalized slope") {
  CHECK(normalized_slope(2.0, 1.0) == -0.5);
  CHECK(normalized_slope(1.0, 1.5) == 0.5);
  CHECK(normalized_slope(0.0, 0.0) == 0.0);
}

TEST_CASE("low-frequency rule on a single sharpness peak") {
  StopConfig cfg;
  StopState st;
  for (long k = 0; k <= 300; ++k) {
    const double lap = k <= 150 ? 1.0 + k : 301.0 - k;
    stop_step(st, k, lap, -0.5, cfg);  // slope far below -eps: high never fires
  }
  CHECK(st.fired == Criterion::Low);
  CHECK(st.fired_at == 151);
  CHECK(*st.n_star == 150);
}

TEST_CASE("low-frequency rule waits for k_min and reports the last peak") {
  StopConfig cfg;
  cfg.k_min = 100;
  StopState st;
  // Peak at 40, dip, then a shallower second peak at 90, decreasing afterwards.
  auto lap = [](long k) {
    if (k <= 40) return double(k);
    if (k <= 60) return 40.0 - (k - 40);
    if (k <= 90) return 20.0 + 0.5 * (k - 60);
    return 35.0 - 0.1 * (k - 90);
  };
  for (long k = 0; k <= 200 && !st.frozen(); ++k) stop_step(st, k, lap(k), -1.0, cfg);
  CHECK(st.fired == Criterion::Low);
  CHECK(st.fired_at == 101);
  CHECK(*st.n_star == 90);
}

TEST_CASE("low-frequency rule without an interior peak falls back to the argmax") {
  StopConfig cfg;
  cfg.k_min = 5;
  StopState st;
  for (long k = 0; k <= 10 && !st.frozen(); ++k) stop_step(st, k, 100.0 - k, -1.0, cfg);
  CHECK(st.fired_at == 6);
  CHECK(*st.n_star == 0);
}

TEST_CASE("high-frequency rule with backoff") {
  StopConfig cfg;
  cfg.tau = 3;
  cfg.eps = 0.01;
  StopState st;
  for (long k = 0; k <= 100 && !st.frozen(); ++k) {
    const double delta = k < 40 ? -0.1 : (k < 45 ? 0.002 : -0.005);  // positive slopes never fire
    stop_step(st, k, 1.0 + k, delta, cfg);
  }
  CHECK(st.fired == Criterion::High);
  CHECK(st.fired_at == 45);
  CHECK(*st.n_star == 42);
}

TEST_CASE("smoothing averages the recent slopes") {
  StopState st;
  StopConfig cfg;
  cfg.smoothing = 3;
  for (long k = 0; k <= 4; ++k) stop_step(st, k, 1.0 + k, -0.01 * k, cfg);
  CHECK(smoothed_slope(st, 4, 3) == doctest::Approx(-0.03));
  CHECK(smoothed_slope(st, 1, 3) == doctest::Approx(-0.01));
}

TEST_CASE("property: detector invariants over random trajectories") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Philox rng(seed, 99);
    StopConfig cfg;
    cfg.k_min = 2 + static_cast<long>(rng.below(150));
    cfg.eps = rng.uniform() < 0.2 ? 0.0 : 0.05 * rng.uniform();
    cfg.tau = static_cast<long>(rng.below(8));
    const Series s = random_series(seed, 400);
    const Trajectory traj = to_trajectory(s, 16, false);

    StopState st;
    long frozen_from = -1;
    std::optional<long> n_star_at_freeze;
    for (const auto& r : traj.records()) {
      stop_step(st, r.k, r.lap_var, r.delta_k, cfg);
      if (st.frozen() && frozen_from < 0) {
        frozen_from = r.k;
        n_star_at_freeze = st.n_star;
      }
    }
    INFO("seed " << seed);
    // Frozen states never change, and exactly one outcome is reported.
    CHECK(st.fired_at == (frozen_from < 0 ? -1 : frozen_from));
    CHECK(st.n_star == n_star_at_freeze);
    CHECK(st.n_star.has_value() == st.frozen());

    if (cfg.eps == 0.0) CHECK(st.fired != Criterion::High);
    if (st.fired == Criterion::Low) {
      const long k = st.fired_at;
      CHECK(k > cfg.k_min);
      CHECK(s.lap[k] < s.lap[k - 1]);
      for (long j = cfg.k_min + 1; j < k; ++j) CHECK(s.lap[j] >= s.lap[j - 1]);
      CHECK(*st.n_star < k);
      // n* is the latest interior maximum before the firing iteration.
      long last = -1;
      for (long j = 1; j + 1 <= k; ++j)
        if (s.lap[j - 1] < s.lap[j] && s.lap[j + 1] < s.lap[j]) last = j;
      if (last >= 0) CHECK(*st.n_star == last);
    }
    if (st.fired == Criterion::High) {
      const long k = st.fired_at;
      const double d = traj.at(k).delta_k;
      CHECK(d <= 0.0);
      CHECK(std::abs(d) < cfg.eps);
      CHECK(*st.n_star == k - cfg.tau);
    }
    // The recorded trajectory replays to the same decision.
    const ReplayOutcome rep = replay(traj, cfg);
    CHECK(rep.criterion == st.fired);
    CHECK(rep.fired_at == st.fired_at);
    if (st.n_star) CHECK(rep.n_star == *st.n_star);
  }
}

TEST_CASE("property: monotone sharpness never triggers the low rule") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Philox rng(seed);
    StopState st;
    StopConfig cfg;
    double lap = 0;
    for (long k = 0; k <= 500; ++k) {
      lap += rng.uniform();
      stop_step(st, k, lap, 0.1, cfg);
    }
    CHECK(st.fired == Criterion::None);
    CHECK(st.last_peak == -1);
  }
}

TEST_CASE("property: snapshot store is bounded and keeps every peak") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int window = 4 + static_cast<int>(seed % 13);
    const Trajectory t = to_trajectory(random_series(seed, 300), window, true);
    INFO("seed " << seed);
    CHECK(t.stored_snapshots() <= static_cast<std::size_t>(window) + t.sharpness_peaks().size() + 1);
    for (long p : t.sharpness_peaks()) {
      REQUIRE(t.snapshot(p) != nullptr);
      CHECK((*t.snapshot(p))[0] == static_cast<double>(p));
    }
    REQUIRE(t.snapshot(t.sharpness_argmax()) != nullptr);
    for (long k = t.size() - window; k < t.size(); ++k) CHECK(t.snapshot(k) != nullptr);
    // Something outside the ring that is neither a peak nor the argmax is gone.
    for (long k = 0; k < t.size() - window; ++k) {
      const auto& pk = t.sharpness_peaks();
      if (k != t.sharpness_argmax() && !std::binary_search(pk.begin(), pk.end(), k)) {
        CHECK(t.snapshot(k) == nullptr);
      }
    }
  }
}

TEST_CASE("trajectory csv round trip is exact") {
  Trajectory t = to_trajectory(random_series(5, 40), 16, false);
  std::stringstream ss;
  t.write_csv(ss);
  CHECK(ss.str().rfind("k,loss,delta_k,lap_var,psnr_ref\n0,", 0) == 0);
  const Trajectory back = Trajectory::read_csv(ss);
  REQUIRE(back.size() == t.size());
  for (long k = 0; k < t.size(); ++k) {
    CHECK(back.at(k).loss == t.at(k).loss);
    CHECK(back.at(k).lap_var == t.at(k).lap_var);
    if (k == 0) {
      CHECK(std::isnan(back.at(k).delta_k));
    } else {
      CHECK(back.at(k).delta_k == t.at(k).delta_k);
    }
  }
  std::stringstream bad("k,loss,delta_k,lap_var,psnr_ref\n0,x,nan,1,\n");
  CHECK_THROWS_AS(Trajectory::read_csv(bad), Error);
}

TEST_CASE("report round trip and config hash") {
  CHECK(config_hash("") == "cbf29ce484222325");
  CHECK(config_hash("a") == "af63dc4c8601ec8c");
  CHECK(config_hash("foobar") == "85944171f73967e8");
  StopReport r;
  r.criterion = Criterion::High;
  r.n_star = 412;
  r.iters_run = 420;
  r.loss_at_stop = 0.123456789012345678;
  r.lap_var_at_stop = 3e-5;
  r.config = RestoreConfig{}.canonical();
  r.config_hash = config_hash(r.config);
  std::stringstream ss;
  r.write(ss);
  const StopReport b = StopReport::read(ss);
  CHECK(b.criterion == r.criterion);
  CHECK(b.n_star == r.n_star);
  CHECK(b.iters_run == r.iters_run);
  CHECK(b.loss_at_stop == r.loss_at_stop);
  CHECK(b.config_hash == r.config_hash);
  RestoreConfig other;
  other.stop.eps = 0.0005;
  CHECK(config_hash(other.canonical()) != r.config_hash);
}

TEST_CASE("stop config validation") {
  StopConfig c;
  CHECK_NOTHROW(c.validate(16));
  c.tau = 16;
  CHECK_THROWS_AS(c.validate(16), Error);
  c.tau = 0;
  c.eps = -1;
  CHECK_THROWS_AS(c.validate(16), Error);
}
