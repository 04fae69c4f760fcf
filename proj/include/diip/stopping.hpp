#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "diip/inversion.hpp"
#include "diip/trajectory.hpp"

namespace diip {

struct StopConfig {
  long k_min = 100;
  double eps = 0.001;
  long tau = 0;
  int smoothing = 1;  // moving-average window over delta_k; 1 = raw

  void validate(int window) const;
  /// Canonical one-line form, also the input of config_hash().
  std::string canonical() const;
};

enum class Criterion { None, Low, High };
const char* criterion_name(Criterion c);

struct StopState {
  long last_peak = -1;  // most recent interior sharpness maximum, -1 if none yet
  Criterion fired = Criterion::None;
  std::optional<long> n_star;
  long fired_at = -1;
  std::vector<double> sharpness;  // sigma^2[0..k]
  std::vector<double> slopes;     // delta_k[0..k]; NaN at 0

  bool frozen() const { return fired != Criterion::None; }
  bool detected_low() const { return fired == Criterion::Low; }
  bool detected_high() const { return fired == Criterion::High; }
  /// Index of the largest sharpness so far (first on ties).
  long sharpness_argmax() const;
};

/// Records sigma^2[k]; marks k-1 as a peak when sigma^2[k-2] < sigma^2[k-1] > sigma^2[k].
void observe_sharpness(StopState& st, long k, double lap_var);

/// Fires when k > k_min and sigma^2[k] < sigma^2[k-1]; n* = last peak (or the
/// sharpness argmax when no peak exists yet).
void check_low_freq(StopState& st, long k, double lap_var, double lap_var_prev,
                    const StopConfig& cfg);

/// Fires when k > tau, delta <= 0 and |delta| < eps; n* = k - tau.
void check_high_freq(StopState& st, long k, double delta, const StopConfig& cfg);

/// Mean of the last `window` defined slopes ending at k.
double smoothed_slope(const StopState& st, long k, int window);

/// One full per-iteration update in the fixed order: sharpness, low, high.
void stop_step(StopState& st, long k, double lap_var, double delta, const StopConfig& cfg);

/// Observer that drives StopState from a live inversion. After firing it pins
/// the n* snapshot; when halt_on_fire is false the run continues to N but the
/// state stays frozen.
class StopDetector final : public InversionObserver {
 public:
  StopDetector(StopConfig cfg, bool halt_on_fire = true);
  bool observe(Trajectory& traj, const TrajectoryRecord& rec) override;
  const StopState& state() const { return st_; }

 private:
  StopConfig cfg_;
  bool halt_;
  StopState st_;
};

struct StopReport {
  Criterion criterion = Criterion::None;
  long n_star = 0;
  long iters_run = 0;
  double loss_at_stop = 0.0;
  double lap_var_at_stop = 0.0;
  std::string config_hash;
  std::string config;  // canonical text of the hashed config

  void write(std::ostream& os) const;
  static StopReport read(std::istream& is);
};

struct RestoreConfig {
  InversionConfig inversion;
  StopConfig stop;
  /// Keep optimizing to N after a detection (benchmarks need the whole curve).
  bool run_to_end = false;

  std::string canonical() const;
};

struct RestoreResult {
  Image x_hat;
  StopReport report;
  Trajectory trajectory;
};

/// 64-bit FNV-1a as 16 hex digits.
std::string config_hash(const std::string& canonical);

/// Inversion with both detectors attached. On detection returns the stored
/// snapshot at n*; otherwise the last sharpness peak with criterion None.
/// Throws NumericalError if the inversion hit a non-finite value.
RestoreResult diip_restore(const Image& y, const DdimSampler& g, const RestoreConfig& cfg,
                           const Image* reference = nullptr);

/// Outcome of re-running the detectors on a recorded trajectory.
struct ReplayOutcome {
  Criterion criterion = Criterion::None;
  long n_star = 0;
  long fired_at = -1;
};

ReplayOutcome replay(const Trajectory& traj, const StopConfig& cfg);

}  // namespace diip
