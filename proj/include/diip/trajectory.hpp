#pragma once

#include <deque>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "diip/image.hpp"

namespace diip {

inline constexpr double kUndefinedSlope = std::numeric_limits<double>::quiet_NaN();

/// (E_curr - E_prev) / E_prev. A previous loss of exactly zero means the
/// target was already fit; that returns 0 (flat).
double normalized_slope(double e_prev, double e_curr);

struct TrajectoryRecord {
  long k = 0;
  double loss = 0.0;
  double delta_k = kUndefinedSlope;  // NaN at k = 0
  double lap_var = 0.0;
  std::optional<double> psnr_ref;
};

/// Per-iteration scalars plus a bounded image store: a ring of the last W
/// reconstructions, and pinned copies of sharpness maxima (every interior
/// local maximum of lap_var, plus the running global argmax).
class Trajectory {
 public:
  explicit Trajectory(int window = 16);

  /// Appends record k (must equal size()) and its reconstruction.
  void append(const TrajectoryRecord& rec, const Image& x_hat);
  /// Appends a record without an image (CSV replay).
  void append_record(const TrajectoryRecord& rec);

  const std::vector<TrajectoryRecord>& records() const { return records_; }
  const TrajectoryRecord& at(long k) const { return records_.at(static_cast<std::size_t>(k)); }
  long size() const { return static_cast<long>(records_.size()); }
  bool empty() const { return records_.empty(); }
  int window() const { return window_; }

  /// Keeps the snapshot of iteration k beyond the ring's lifetime.
  /// Returns false if k is no longer stored.
  bool pin(long k);
  const Image* snapshot(long k) const;
  std::vector<long> pinned_iters() const;
  std::size_t stored_snapshots() const;
  /// Interior local maxima of lap_var seen so far, in order.
  const std::vector<long>& sharpness_peaks() const { return peaks_; }
  long sharpness_argmax() const { return argmax_; }

  std::optional<std::string> failure;  // set when the run aborted on a non-finite value

  void write_csv(std::ostream& os) const;
  void save_csv(const std::filesystem::path& path) const;
  static Trajectory read_csv(std::istream& is, int window = 16);
  static Trajectory load_csv(const std::filesystem::path& path, int window = 16);
  /// Writes every stored snapshot as snap_<k>.dimg.
  void save_snapshots(const std::filesystem::path& dir) const;

 private:
  void track_sharpness(long k);
  bool store(long k);

  int window_;
  std::vector<TrajectoryRecord> records_;
  std::deque<std::pair<long, Image>> ring_;
  std::map<long, Image> pinned_;
  std::vector<long> peaks_;
  long argmax_ = -1;
  std::set<long> requested_;  // pinned through pin(), never released
};

}  // namespace diip
