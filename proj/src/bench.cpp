#include "diip/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <map>
#include <thread>

#include "diip/degrade.hpp"
#include "diip/image_io.hpp"

namespace diip {

std::vector<BenchItem> load_benchmark(const std::filesystem::path& manifest) {
  const auto dir = manifest.parent_path();
  std::vector<BenchItem> items;
  for (const auto& row : read_manifest(manifest)) {
    if (row.degraded_path.empty()) continue;
    items.push_back({std::filesystem::path(row.degraded_path).stem().string(), row.kind,
                     load_dimg(dir / row.clean_path), load_dimg(dir / row.degraded_path)});
  }
  return items;
}

long oracle_iter(const Trajectory& traj) {
  long best = -1;
  for (const auto& r : traj.records()) {
    if (!r.psnr_ref) throw Error("oracle: trajectory has no reference PSNR");
    if (best < 0 || *r.psnr_ref > *traj.at(best).psnr_ref) best = r.k;
  }
  return best;
}

namespace {

// Keeps a private copy of the best-PSNR iterate so SSIM can be scored at the
// oracle stop. Benchmark-only: it reads psnr_ref.
class OracleKeeper final : public InversionObserver {
 public:
  bool observe(Trajectory& traj, const TrajectoryRecord& rec) override {
    if (best_k < 0 || *rec.psnr_ref > best_psnr) {
      best_k = rec.k;
      best_psnr = *rec.psnr_ref;
      best = *traj.snapshot(rec.k);
    }
    return false;
  }
  long best_k = -1;
  double best_psnr = 0;
  Image best;
};

BenchResult run_one(const BenchItem& it, const DdimSampler& g, const BenchConfig& cfg) {
  BenchResult r;
  r.name = it.name;
  r.kind = it.kind;
  try {
    r.psnr_input = psnr(it.degraded, it.clean);
    r.ssim_input = ssim(it.degraded, it.clean);
    RestoreConfig rc = cfg.restore;
    rc.run_to_end = true;
    rc.stop.validate(rc.inversion.window);
    StopDetector det(rc.stop, false);
    OracleKeeper oracle;
    InversionRun run = run_inversion(it.degraded, g, rc.inversion, {&det, &oracle}, &it.clean);
    if (run.trajectory.failure) throw NumericalError(*run.trajectory.failure);
    const StopState& st = det.state();
    r.criterion = st.fired;
    r.n_star = st.n_star ? *st.n_star : replay(run.trajectory, rc.stop).n_star;
    const Image* self = run.trajectory.snapshot(r.n_star);
    if (!self) throw Error("bench: snapshot at n* not retained");
    r.psnr_self = *run.trajectory.at(r.n_star).psnr_ref;
    r.ssim_self = ssim(*self, it.clean);
    r.oracle_k = oracle.best_k;
    r.psnr_oracle = oracle.best_psnr;
    r.ssim_oracle = ssim(oracle.best, it.clean);
    r.gap = r.psnr_oracle - r.psnr_self;
    r.trajectory = std::move(run.trajectory);
    if (cfg.run_dip) {
      DipConfig dc = cfg.dip;
      DipRun dr = dip_run(it.degraded, dc, {}, &it.clean);
      if (dr.trajectory.failure) throw NumericalError(*dr.trajectory.failure);
      r.dip_trajectory = std::move(dr.trajectory);
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace

std::vector<BenchResult> run_benchmark(const std::vector<BenchItem>& items, const DdimSampler& g,
                                       const BenchConfig& cfg) {
  std::vector<BenchResult> out(items.size());
  int workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max<int>(1, static_cast<int>(items.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < items.size();) out[i] = run_one(items[i], g, cfg);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

std::vector<AblationRow> ablate(const std::vector<const Trajectory*>& trajs,
                                const StopConfig& base, const std::string& param,
                                const std::vector<double>& values) {
  std::vector<AblationRow> rows;
  for (double v : values) {
    StopConfig c = base;
    if (param == "eps") c.eps = v;
    else if (param == "k_min") c.k_min = static_cast<long>(v);
    else if (param == "tau") c.tau = static_cast<long>(v);
    else if (param == "smoothing") c.smoothing = static_cast<int>(v);
    else throw Error("ablation: unknown parameter '" + param + "'");
    AblationRow row{param, v};
    double sum = 0;
    for (const Trajectory* t : trajs) {
      const ReplayOutcome o = replay(*t, c);
      const auto& rec = t->at(o.n_star);
      if (!rec.psnr_ref) throw Error("ablation: trajectory has no reference PSNR");
      sum += *rec.psnr_ref;
      (o.criterion == Criterion::Low ? row.low : o.criterion == Criterion::High ? row.high : row.none)++;
    }
    row.mean_psnr = trajs.empty() ? 0 : sum / static_cast<double>(trajs.size());
    rows.push_back(row);
  }
  return rows;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

std::string f6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw Error("cannot open '" + p.string() + "' for writing");
  return os;
}

}  // namespace

void write_results_csv(const std::filesystem::path& path, const std::vector<BenchResult>& rs) {
  auto os = open_out(path);
  os << "image,kind,psnr_input,ssim_input,criterion,n_star,psnr_self,ssim_self,oracle_k,"
        "psnr_oracle,ssim_oracle,gap,dip_psnr_max,error\n";
  for (const auto& r : rs) {
    std::string dip;
    if (r.dip_trajectory && !r.dip_trajectory->empty()) {
      dip = f6(*r.dip_trajectory->at(oracle_iter(*r.dip_trajectory)).psnr_ref);
    }
    os << r.name << ',' << r.kind << ',' << f6(r.psnr_input) << ',' << f6(r.ssim_input) << ','
       << criterion_name(r.criterion) << ',' << r.n_star << ',' << f6(r.psnr_self) << ','
       << f6(r.ssim_self) << ',' << r.oracle_k << ',' << f6(r.psnr_oracle) << ','
       << f6(r.ssim_oracle) << ',' << f6(r.gap) << ',' << dip << ',' << (r.error.empty() ? "" : "\"" + r.error + "\"")
       << '\n';
  }
}

void write_aggregate_csv(const std::filesystem::path& path, const std::vector<BenchResult>& rs) {
  std::map<std::string, std::vector<const BenchResult*>> groups;
  for (const auto& r : rs) {
    if (!r.error.empty()) continue;
    groups[r.kind].push_back(&r);
    groups["all"].push_back(&r);
  }
  auto os = open_out(path);
  os << "kind,count,psnr_input,psnr_self,psnr_oracle,ssim_input,ssim_self,ssim_oracle,median_gap\n";
  for (const auto& [kind, g] : groups) {
    double s[6] = {0, 0, 0, 0, 0, 0};
    std::vector<double> gaps;
    for (const auto* r : g) {
      s[0] += r->psnr_input; s[1] += r->psnr_self; s[2] += r->psnr_oracle;
      s[3] += r->ssim_input; s[4] += r->ssim_self; s[5] += r->ssim_oracle;
      gaps.push_back(r->gap);
    }
    const double n = static_cast<double>(g.size());
    os << kind << ',' << g.size();
    for (double v : s) os << ',' << f6(v / n);
    os << ',' << f6(median(gaps)) << '\n';
  }
}

void write_ablation_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
  auto os = open_out(path);
  os << "param,value,mean_psnr,low,high,none\n";
  for (const auto& r : rows) {
    char v[32];
    std::snprintf(v, sizeof v, "%g", r.value);
    os << r.param << ',' << v << ',' << f6(r.mean_psnr) << ',' << r.low << ',' << r.high << ','
       << r.none << '\n';
  }
}

}  // namespace diip
