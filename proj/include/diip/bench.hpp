#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "diip/dip.hpp"
#include "diip/stopping.hpp"

namespace diip {

struct BenchItem {
  std::string name;
  std::string kind;
  Image clean;
  Image degraded;
};

/// Loads every row of a manifest that has a degraded image.
std::vector<BenchItem> load_benchmark(const std::filesystem::path& manifest);

struct BenchConfig {
  RestoreConfig restore;  // run_to_end is forced on so oracle and ablations see the full curve
  bool run_dip = false;
  DipConfig dip;
  int workers = 0;  // 0 = hardware concurrency
};

struct BenchResult {
  std::string name, kind;
  double psnr_input = 0, ssim_input = 0;
  Criterion criterion = Criterion::None;
  long n_star = 0;
  double psnr_self = 0, ssim_self = 0;
  long oracle_k = 0;
  double psnr_oracle = 0, ssim_oracle = 0;
  double gap = 0;  // psnr_oracle - psnr_self, >= 0 by construction
  Trajectory trajectory;
  std::optional<Trajectory> dip_trajectory;
  std::string error;  // non-empty if this image failed
};

/// Restores every item (in parallel across items). The clean image only feeds
/// the psnr_ref column and the oracle; it never reaches the detectors.
std::vector<BenchResult> run_benchmark(const std::vector<BenchItem>& items, const DdimSampler& g,
                                       const BenchConfig& cfg);

/// Index of the largest psnr_ref (first on ties).
long oracle_iter(const Trajectory& traj);

struct AblationRow {
  std::string param;
  double value = 0;
  double mean_psnr = 0;
  int low = 0, high = 0, none = 0;
};

/// Replays each trajectory under each config and averages psnr_ref at n*.
std::vector<AblationRow> ablate(const std::vector<const Trajectory*>& trajs,
                                const StopConfig& base, const std::string& param,
                                const std::vector<double>& values);

void write_results_csv(const std::filesystem::path& path, const std::vector<BenchResult>& rs);
/// One row per kind plus "all": count, mean PSNR/SSIM (input, self, oracle), median gap.
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<BenchResult>& rs);
void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

double median(std::vector<double> v);

}  // namespace diip
