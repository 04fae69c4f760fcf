#include "diip/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "diip/bench.hpp"
#include "diip/conv_denoiser.hpp"
#include "diip/degrade.hpp"
#include "diip/image_io.hpp"
#include "diip/plot.hpp"
#include "diip/rng.hpp"
#include "diip/train.hpp"

namespace diip {

namespace fs = std::filesystem;

std::vector<std::pair<std::string, std::string>> read_flat_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config '" + path + "'");
  std::vector<std::pair<std::string, std::string>> kv;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  int lineno = 0;
  for (std::string line; std::getline(is, line);) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw Error(path + ":" + std::to_string(lineno) + ": empty key");
    kv.emplace_back(key, value);
  }
  return kv;
}

namespace {

std::uint64_t env_seed() {
  if (const char* s = std::getenv("DIIP_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw Error(std::string("DIIP_SEED is not an unsigned integer: '") + s + "'");
    }
  }
  return 0;
}

struct ModelArgs {
  int height = 16, width = 16, channels = 1;
  int steps = kDefaultSteps;
  double beta1 = kDefaultBeta1, betaT = kDefaultBetaT;
  int c1 = 16, c2 = 32, c3 = 64;
};

struct DataArgs {
  std::string dataset = "shapes";
  std::uint64_t data_seed = 0;
  int max_shapes = 1;
  double jitter = 1.0;
  bool high_contrast = false;
  int gmm_components = 8;
  double gmm_sigma = 0.05;
};

struct InvArgs {
  double lr = 0.0015;
  long iters = 1500;
  int window = 16;
  long k_min = 100;
  double eps = 0.001;
  long tau = 0;
  int smoothing = 1;
};

void add_shape(CLI::App* s, ModelArgs& m) {
  s->add_option("--height", m.height, "image height")->check(CLI::PositiveNumber);
  s->add_option("--width", m.width, "image width")->check(CLI::PositiveNumber);
  s->add_option("--channels", m.channels, "image channels")->check(CLI::Range(1, 3));
}

void add_data(CLI::App* s, DataArgs& d) {
  s->add_option("--dataset", d.dataset, "gmm | shapes | stripes | blobs");
  s->add_option("--data_seed", d.data_seed, "seed of the clean-image generator");
  s->add_option("--max_shapes", d.max_shapes, "shapes per image (shapes dataset)");
  s->add_option("--jitter", d.jitter, "shape position spread, 0 = centred (shapes dataset)");
  s->add_option("--high_contrast", d.high_contrast, "dark background, bright shapes (shapes dataset)");
  s->add_option("--gmm_components", d.gmm_components, "mixture size (gmm dataset)");
  s->add_option("--gmm_sigma", d.gmm_sigma, "per-component std (gmm dataset)");
}

void add_inversion(CLI::App* s, InvArgs& a) {
  s->add_option("--lr", a.lr, "Adam learning rate on the latent");
  s->add_option("--iters", a.iters, "maximum iterations N");
  s->add_option("--window", a.window, "snapshot ring size W");
  s->add_option("--k_min", a.k_min, "minimum iterations before the low-frequency stop");
  s->add_option("--eps", a.eps, "normalized-slope threshold of the high-frequency stop");
  s->add_option("--tau", a.tau, "backoff of the high-frequency stop");
  s->add_option("--smoothing", a.smoothing, "moving-average window on the slope (1 = off)");
}

RestoreConfig restore_config(const InvArgs& a, std::uint64_t seed) {
  RestoreConfig rc;
  rc.inversion.lr = a.lr;
  rc.inversion.max_iters = a.iters;
  rc.inversion.window = a.window;
  rc.inversion.seed = seed;
  rc.stop.k_min = a.k_min;
  rc.stop.eps = a.eps;
  rc.stop.tau = a.tau;
  rc.stop.smoothing = a.smoothing;
  return rc;
}

std::unique_ptr<Dataset> dataset_from(const DataArgs& d, const ModelArgs& m) {
  DatasetOptions opt;
  opt.gmm_components = d.gmm_components;
  opt.gmm_sigma = d.gmm_sigma;
  opt.max_shapes = d.max_shapes;
  opt.jitter = d.jitter;
  opt.high_contrast = d.high_contrast;
  return make_dataset(d.dataset, ImageShape{m.height, m.width, m.channels}, d.data_seed, opt);
}

void echo_config(const fs::path& dir, const CLI::App* sub, std::uint64_t seed) {
  std::ofstream os(dir / "effective_config.ini");
  if (!os) throw Error("cannot write '" + (dir / "effective_config.ini").string() + "'");
  os << "# " << kToolVersion << " " << sub->get_name() << "\n";
  for (const CLI::Option* opt : sub->get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    std::string value;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (opt->get_multi_option_policy() == CLI::MultiOptionPolicy::TakeAll) {
        for (std::size_t i = 0; i < res.size(); ++i) value += (i ? "," : "") + res[i];
      } else {
        value = res.back();
      }
    } else {
      value = opt->get_default_str();
    }
    if (name == "seed") value = std::to_string(seed);
    os << name << " = " << value << "\n";
  }
}

/// "kind" or "kind:key=value;key=value".
DegradationSpec parse_spec_arg(const std::string& arg, std::uint64_t seed) {
  const auto colon = arg.find(':');
  const DegradationKind kind = parse_kind(arg.substr(0, colon));
  std::string json = "{";
  if (colon != std::string::npos) {
    std::stringstream ss(arg.substr(colon + 1));
    bool first = true;
    for (std::string kv; std::getline(ss, kv, ';');) {
      if (kv.empty()) continue;
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw Error("spec '" + arg + "': expected key=value");
      json += (first ? "\"" : ",\"") + kv.substr(0, eq) + "\":" + kv.substr(eq + 1);
      first = false;
    }
  }
  json += "}";
  return DegradationSpec::from_json(kind, json, seed);
}

ConvDenoiser new_denoiser(const ModelArgs& m) {
  nn::UNetConfig cfg;
  cfg.in_channels = cfg.out_channels = m.channels;
  cfg.c1 = m.c1;
  cfg.c2 = m.c2;
  cfg.c3 = m.c3;
  return ConvDenoiser(nn::UNet(cfg), make_schedule(m.steps, m.beta1, m.betaT),
                      ImageShape{m.height, m.width, m.channels});
}

std::vector<double> smoothed(const Trajectory& t, int window) {
  std::vector<double> out(static_cast<std::size_t>(t.size()), kUndefinedSlope);
  for (long k = 1; k < t.size(); ++k) {
    double s = 0;
    int n = 0;
    for (long j = k; j >= 1 && n < window; --j, ++n) s += t.at(j).delta_k;
    out[static_cast<std::size_t>(k)] = s / n;
  }
  return out;
}

int cmd_report(const std::vector<std::string>& paths, const fs::path& out, int window) {
  std::vector<Trajectory> loaded;
  for (const auto& p : paths) {
    loaded.push_back(Trajectory::load_csv(p));
    if (loaded.back().size() < 2) throw Error("trajectory '" + p + "' has fewer than two records");
  }
  fs::create_directories(out);
  std::vector<Series> deltas, sharp;
  std::map<std::string, int> seen;
  std::ofstream mins(out / "minima.csv");
  if (!mins) throw Error("cannot write '" + (out / "minima.csv").string() + "'");
  mins << "trajectory,argmin_smoothed_delta,min_smoothed_delta,argmax_lap_var,max_lap_var,argmax_psnr_ref\n";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const Trajectory& t = loaded[i];
    const auto sm = smoothed(t, window);
    Series d, s;
    long kmin = 1, kmax = 0, kpsnr = -1;
    for (long k = 0; k < t.size(); ++k) {
      if (k >= 1) {
        d.points.emplace_back(static_cast<double>(k), -sm[static_cast<std::size_t>(k)]);
        if (sm[static_cast<std::size_t>(k)] < sm[static_cast<std::size_t>(kmin)]) kmin = k;
      }
      s.points.emplace_back(static_cast<double>(k), t.at(k).lap_var);
      if (t.at(k).lap_var > t.at(kmax).lap_var) kmax = k;
      if (t.at(k).psnr_ref && (kpsnr < 0 || *t.at(k).psnr_ref > *t.at(kpsnr).psnr_ref)) kpsnr = k;
    }
    std::string stem = fs::path(paths[i]).stem().string();
    if (seen[stem]++ > 0) stem += "_" + std::to_string(i);
    save_png(out / (stem + "_delta.png"), render_line_plot({d}, PlotOptions{640, 400, true}));
    save_png(out / (stem + "_lapvar.png"), render_line_plot({s}, PlotOptions{640, 400, false}));
    mins << stem << ',' << kmin << ',' << sm[static_cast<std::size_t>(kmin)] << ',' << kmax << ','
         << t.at(kmax).lap_var << ',' << (kpsnr >= 0 ? std::to_string(kpsnr) : "") << '\n';
    deltas.push_back(std::move(d));
    sharp.push_back(std::move(s));
  }
  if (paths.size() > 1) {
    save_png(out / "overlay_delta.png", render_line_plot(deltas, PlotOptions{640, 400, true}));
    save_png(out / "overlay_lapvar.png", render_line_plot(sharp, PlotOptions{640, 400, false}));
  }
  return 0;
}

int dispatch(const std::vector<std::string>& raw) {
  CLI::App app{"Blind image restoration by inversion of a frozen diffusion sampler", "diip"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();

  std::uint64_t seed = env_seed();
  std::string config, out;
  ModelArgs model;
  DataArgs data;
  InvArgs inv;

  auto common = [&](CLI::App* s, bool needs_out = true) {
    s->add_option("--config", config, "flat key = value file; command-line flags take precedence");
    s->add_option("--seed", seed, "global seed (falls back to DIIP_SEED)");
    auto* o = s->add_option("--out", out, "output directory");
    if (needs_out) o->required();
  };

  // train
  auto* train = app.add_subcommand("train", "train the denoiser on a synthetic dataset");
  TrainConfig tc;
  tc.t_stride = kDefaultStride;
  common(train);
  add_shape(train, model);
  add_data(train, data);
  train->add_option("--iters", tc.iters, "training steps");
  train->add_option("--batch", tc.batch, "images per step");
  train->add_option("--lr", tc.lr, "Adam learning rate");
  train->add_option("--t_stride", tc.t_stride, "sample t on multiples of this stride (0 = all t)");
  train->add_option("--steps", model.steps, "diffusion steps T");
  train->add_option("--beta1", model.beta1, "first beta");
  train->add_option("--betaT", model.betaT, "last beta");
  train->add_option("--c1", model.c1, "channels at full resolution");
  train->add_option("--c2", model.c2, "channels at 1/2 resolution");
  train->add_option("--c3", model.c3, "channels at 1/4 resolution");

  // degrade
  auto* degrade = app.add_subcommand("degrade", "write a benchmark of clean/degraded pairs");
  int count = 20;
  std::uint64_t first_index = 1'000'000'000;
  std::vector<std::string> specs;
  common(degrade);
  add_shape(degrade, model);
  add_data(degrade, data);
  degrade->add_option("--count", count, "clean images");
  degrade->add_option("--first_index", first_index, "index of the first clean sample");
  degrade->add_option("--spec", specs, "kind[:key=value;...], repeatable")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(',');

  // restore
  auto* restore = app.add_subcommand("restore", "restore one image");
  std::string ckpt, input, reference;
  bool run_to_end = false, snapshots = false;
  common(restore);
  add_inversion(restore, inv);
  restore->add_option("--checkpoint", ckpt, "denoiser checkpoint")->required();
  restore->add_option("--input", input, "degraded image (.dimg or .png)")->required();
  restore->add_option("--reference", reference, "clean image, only for the psnr_ref column");
  restore->add_flag("--run_to_end", run_to_end, "keep iterating to N after a stop fires");
  restore->add_flag("--snapshots", snapshots, "write the retained snapshots");

  // bench
  auto* bench = app.add_subcommand("bench", "restore a benchmark and tabulate PSNR/SSIM");
  std::string manifest;
  bool with_dip = false;
  DipConfig dip;
  int workers = 0;
  std::vector<double> sweep_eps{0.005, 0.001, 0.0005}, sweep_kmin{50, 100, 150};
  common(bench);
  add_inversion(bench, inv);
  bench->add_option("--checkpoint", ckpt, "denoiser checkpoint")->required();
  bench->add_option("--manifest", manifest, "benchmark manifest.tsv")->required();
  bench->add_flag("--dip", with_dip, "also run the DIP baseline");
  bench->add_option("--dip_lr", dip.lr, "DIP learning rate");
  bench->add_option("--dip_iters", dip.max_iters, "DIP iterations");
  bench->add_option("--workers", workers, "parallel images (0 = all cores)");
  bench->add_option("--sweep_eps", sweep_eps, "eps values for the ablation")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->delimiter(',');
  bench->add_option("--sweep_k_min", sweep_kmin, "k_min values for the ablation")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->delimiter(',');

  // report
  auto* report = app.add_subcommand("report", "plot slope and sharpness curves from trajectory CSVs");
  std::vector<std::string> trajs;
  int smooth = 5;
  common(report);
  report->add_option("--trajectory", trajs, "trajectory CSV, repeatable")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->required();
  report->add_option("--smoothing", smooth, "moving-average window for the slope curve");

  // Expand --config into flags placed before the user's own, so the latter win.
  std::vector<std::string> args(raw.begin(), raw.end());
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      std::vector<std::string> expanded;
      for (const auto& [k, v] : read_flat_config(args[i + 1])) {
        expanded.push_back("--" + k);
        expanded.push_back(v);
      }
      std::size_t sub = 0;
      while (sub < args.size() && args[sub].rfind("--", 0) == 0) ++sub;
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(std::min(sub + 1, args.size())),
                  expanded.begin(), expanded.end());
      break;
    }
  }
  std::vector<char*> argv{const_cast<char*>("diip")};
  for (auto& a : args) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (train->parsed()) {
    fs::create_directories(out);
    auto ds = dataset_from(data, model);
    ConvDenoiser den = new_denoiser(model);
    den.net().init(derive_seed(seed, 0x696e6974));
    tc.seed = seed;
    std::ofstream loss(fs::path(out) / "train_loss.csv");
    if (!loss) throw Error("cannot write '" + (fs::path(out) / "train_loss.csv").string() + "'");
    loss << "step,loss\n";
    const TrainingMeta meta = train_denoiser(den, *ds, tc, [&](long it, double l) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%ld,%.9g\n", it, l);
      loss << buf;
      if ((it + 1) % 500 == 0) std::cerr << "step " << it + 1 << " loss " << l << "\n";
    });
    save_denoiser(fs::path(out) / "model.ckpt", den, meta);
    echo_config(out, train, seed);
    return 0;
  }
  if (degrade->parsed()) {
    auto ds = dataset_from(data, model);
    std::vector<DegradationSpec> parsed;
    for (const auto& s : specs) parsed.push_back(parse_spec_arg(s, derive_seed(seed, parsed.size())));
    make_benchmark(*ds, count, parsed, out, first_index);
    echo_config(out, degrade, seed);
    return 0;
  }
  if (restore->parsed()) {
    ConvDenoiser den = load_denoiser(ckpt);
    const fs::path in(input);
    const Image y = in.extension() == ".png" ? load_png(in) : load_dimg(in);
    std::optional<Image> ref;
    if (!reference.empty()) {
      const fs::path rp(reference);
      ref = rp.extension() == ".png" ? load_png(rp) : load_dimg(rp);
    }
    DdimSampler g(den, den.schedule());
    RestoreConfig rc = restore_config(inv, seed);
    rc.run_to_end = run_to_end;
    RestoreResult res = diip_restore(y, g, rc, ref ? &*ref : nullptr);
    const fs::path o(out);
    fs::create_directories(o);
    save_dimg(o / "restored.dimg", res.x_hat);
    save_png(o / "restored.png", res.x_hat);
    res.trajectory.save_csv(o / "trajectory.csv");
    std::ofstream rep(o / "report.txt");
    res.report.write(rep);
    if (snapshots) res.trajectory.save_snapshots(o / "snapshots");
    echo_config(o, restore, seed);
    std::cout << "criterion=" << criterion_name(res.report.criterion)
              << " n_star=" << res.report.n_star << "\n";
    return 0;
  }
  if (bench->parsed()) {
    ConvDenoiser den = load_denoiser(ckpt);
    DdimSampler g(den, den.schedule());
    BenchConfig bc;
    bc.restore = restore_config(inv, seed);
    bc.run_dip = with_dip;
    dip.seed = seed;
    bc.dip = dip;
    bc.workers = workers;
    const auto items = load_benchmark(manifest);
    const auto results = run_benchmark(items, g, bc);
    const fs::path o(out);
    fs::create_directories(o / "trajectories");
    bool failed = false;
    std::vector<const Trajectory*> ok;
    for (const auto& r : results) {
      if (!r.error.empty()) {
        failed = true;
        std::cerr << r.name << ": " << r.error << "\n";
        continue;
      }
      ok.push_back(&r.trajectory);
      r.trajectory.save_csv(o / "trajectories" / (r.name + ".csv"));
      if (r.dip_trajectory) r.dip_trajectory->save_csv(o / "trajectories" / ("dip_" + r.name + ".csv"));
    }
    write_results_csv(o / "results.csv", results);
    write_aggregate_csv(o / "aggregate.csv", results);
    write_ablation_csv(o / "ablation_eps.csv", ablate(ok, bc.restore.stop, "eps", sweep_eps));
    write_ablation_csv(o / "ablation_k_min.csv", ablate(ok, bc.restore.stop, "k_min", sweep_kmin));
    echo_config(o, bench, seed);
    return failed ? 1 : 0;
  }
  if (report->parsed()) {
    return cmd_report(trajs, out.empty() ? fs::path(".") : fs::path(out), smooth);
  }
  return 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  try {
    return dispatch(args);
  } catch (const NumericalError& e) {
    std::cerr << "diip: numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "diip: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace diip
