#include "diip/stopping.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace diip {

void StopConfig::validate(int window) const {
  if (k_min < 2) throw Error("stop config: k_min must be >= 2");
  if (!(eps >= 0)) throw Error("stop config: eps must be >= 0");
  if (tau < 0) throw Error("stop config: tau must be >= 0");
  if (tau >= window) throw Error("stop config: tau must be smaller than the snapshot window");
  if (smoothing < 1) throw Error("stop config: smoothing window must be >= 1");
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string StopConfig::canonical() const {
  return "k_min=" + std::to_string(k_min) + ";eps=" + num(eps) + ";tau=" + std::to_string(tau) +
         ";smoothing=" + std::to_string(smoothing);
}

std::string RestoreConfig::canonical() const {
  return stop.canonical() + ";lr=" + num(inversion.lr) +
         ";max_iters=" + std::to_string(inversion.max_iters) +
         ";window=" + std::to_string(inversion.window) + ";seed=" + std::to_string(inversion.seed);
}

const char* criterion_name(Criterion c) {
  switch (c) {
    case Criterion::Low: return "low";
    case Criterion::High: return "high";
    case Criterion::None: break;
  }
  return "none";
}

long StopState::sharpness_argmax() const {
  long best = -1;
  for (std::size_t i = 0; i < sharpness.size(); ++i) {
    if (best < 0 || sharpness[i] > sharpness[static_cast<std::size_t>(best)]) {
      best = static_cast<long>(i);
    }
  }
  return best;
}

void observe_sharpness(StopState& st, long k, double lap_var) {
  if (k != static_cast<long>(st.sharpness.size())) throw Error("stopping: iterations out of order");
  st.sharpness.push_back(lap_var);
  if (k < 2) return;
  const double a = st.sharpness[static_cast<std::size_t>(k - 2)];
  const double b = st.sharpness[static_cast<std::size_t>(k - 1)];
  if (a < b && lap_var < b) st.last_peak = k - 1;
}

void check_low_freq(StopState& st, long k, double lap_var, double lap_var_prev,
                    const StopConfig& cfg) {
  if (st.frozen()) return;
  if (k > cfg.k_min && lap_var < lap_var_prev) {
    st.fired = Criterion::Low;
    st.fired_at = k;
    st.n_star = st.last_peak >= 0 ? st.last_peak : st.sharpness_argmax();
  }
}

void check_high_freq(StopState& st, long k, double delta, const StopConfig& cfg) {
  if (st.frozen()) return;
  if (k > cfg.tau && delta <= 0.0 && std::abs(delta) < cfg.eps) {
    st.fired = Criterion::High;
    st.fired_at = k;
    st.n_star = k - cfg.tau;
  }
}

double smoothed_slope(const StopState& st, long k, int window) {
  double sum = 0.0;
  int n = 0;
  for (long j = k; j >= 1 && n < window; --j, ++n) sum += st.slopes[static_cast<std::size_t>(j)];
  return n > 0 ? sum / n : kUndefinedSlope;
}

void stop_step(StopState& st, long k, double lap_var, double delta, const StopConfig& cfg) {
  st.slopes.push_back(k == 0 ? kUndefinedSlope : delta);
  observe_sharpness(st, k, lap_var);
  if (k == 0) return;
  check_low_freq(st, k, lap_var, st.sharpness[static_cast<std::size_t>(k - 1)], cfg);
  check_high_freq(st, k, smoothed_slope(st, k, cfg.smoothing), cfg);
}

StopDetector::StopDetector(StopConfig cfg, bool halt_on_fire) : cfg_(cfg), halt_(halt_on_fire) {}

bool StopDetector::observe(Trajectory& traj, const TrajectoryRecord& rec) {
  const bool was_frozen = st_.frozen();
  stop_step(st_, rec.k, rec.lap_var, rec.delta_k, cfg_);
  if (!was_frozen && st_.frozen()) {
    if (!traj.pin(*st_.n_star)) throw Error("stopping: snapshot for n* is no longer stored");
    return halt_;
  }
  return false;
}

void StopReport::write(std::ostream& os) const {
  os << "criterion=" << criterion_name(criterion) << '\n'
     << "n_star=" << n_star << '\n'
     << "iters_run=" << iters_run << '\n'
     << "loss_at_stop=" << num(loss_at_stop) << '\n'
     << "lap_var_at_stop=" << num(lap_var_at_stop) << '\n'
     << "config_hash=" << config_hash << '\n'
     << "config=" << config << '\n';
}

StopReport StopReport::read(std::istream& is) {
  std::map<std::string, std::string> kv;
  for (std::string line; std::getline(is, line);) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("stop report: malformed line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(std::string("stop report: missing key ") + key);
    return it->second;
  };
  StopReport r;
  const std::string& c = get("criterion");
  if (c == "low") r.criterion = Criterion::Low;
  else if (c == "high") r.criterion = Criterion::High;
  else if (c == "none") r.criterion = Criterion::None;
  else throw Error("stop report: unknown criterion '" + c + "'");
  r.n_star = std::stol(get("n_star"));
  r.iters_run = std::stol(get("iters_run"));
  r.loss_at_stop = std::stod(get("loss_at_stop"));
  r.lap_var_at_stop = std::stod(get("lap_var_at_stop"));
  r.config_hash = get("config_hash");
  r.config = kv.count("config") ? kv["config"] : "";
  return r;
}

std::string config_hash(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

long fallback_iter(const Trajectory& traj) {
  const auto& peaks = traj.sharpness_peaks();
  return peaks.empty() ? traj.sharpness_argmax() : peaks.back();
}

}  // namespace

RestoreResult diip_restore(const Image& y, const DdimSampler& g, const RestoreConfig& cfg,
                           const Image* reference) {
  cfg.stop.validate(cfg.inversion.window);
  StopDetector det(cfg.stop, !cfg.run_to_end);
  InversionRun run = run_inversion(y, g, cfg.inversion, {&det}, reference);
  Trajectory& traj = run.trajectory;
  if (traj.failure) throw NumericalError(*traj.failure);

  const StopState& st = det.state();
  RestoreResult res{Image(), StopReport(), std::move(traj)};
  StopReport& rep = res.report;
  rep.criterion = st.fired;
  rep.n_star = st.n_star ? *st.n_star : fallback_iter(res.trajectory);
  rep.iters_run = res.trajectory.size() - 1;
  const TrajectoryRecord& at = res.trajectory.at(rep.n_star);
  rep.loss_at_stop = at.loss;
  rep.lap_var_at_stop = at.lap_var;
  rep.config = cfg.canonical();
  rep.config_hash = config_hash(rep.config);
  const Image* snap = res.trajectory.snapshot(rep.n_star);
  if (!snap) throw Error("restore: snapshot for n* was not retained");
  res.x_hat = *snap;
  return res;
}

ReplayOutcome replay(const Trajectory& traj, const StopConfig& cfg) {
  StopState st;
  for (const auto& r : traj.records()) {
    stop_step(st, r.k, r.lap_var, r.delta_k, cfg);
    if (st.frozen()) break;
  }
  ReplayOutcome out;
  out.criterion = st.fired;
  out.fired_at = st.fired_at;
  if (st.n_star) {
    out.n_star = *st.n_star;
  } else {
    out.n_star = st.last_peak >= 0 ? st.last_peak : st.sharpness_argmax();
  }
  return out;
}

}  // namespace diip
