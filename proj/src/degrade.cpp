#include "diip/degrade.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "diip/image_io.hpp"
#include "diip/rng.hpp"

namespace diip {

namespace {

constexpr std::uint64_t kStreamNoise = 1, kStreamSpeckle = 2, kStreamWarp = 3, kStreamFloor = 4;

constexpr std::array<int, 64> kLuminance = {
    16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
    14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
    18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};

const std::array<std::array<double, 8>, 8>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, 8>, 8> c{};
    for (int u = 0; u < 8; ++u) {
      const double a = u == 0 ? std::sqrt(1.0 / 8.0) : 0.5;
      for (int x = 0; x < 8; ++x) c[u][x] = a * std::cos((2 * x + 1) * u * std::numbers::pi / 16.0);
    }
    return c;
  }();
  return basis;
}

}  // namespace

const char* kind_name(DegradationKind k) {
  switch (k) {
    case DegradationKind::GaussianNoise: return "gaussian_noise";
    case DegradationKind::SpeckleMix: return "speckle_mix";
    case DegradationKind::GaussianBlur: return "gaussian_blur";
    case DegradationKind::DownsampleSR: return "downsample_sr";
    case DegradationKind::JpegBlock: return "jpeg_block";
    case DegradationKind::SmoothWarp: return "smooth_warp";
  }
  return "?";
}

DegradationKind parse_kind(const std::string& name) {
  for (auto k : {DegradationKind::GaussianNoise, DegradationKind::SpeckleMix,
                 DegradationKind::GaussianBlur, DegradationKind::DownsampleSR,
                 DegradationKind::JpegBlock, DegradationKind::SmoothWarp}) {
    if (name == kind_name(k)) return k;
  }
  throw Error("unknown degradation kind '" + name + "'");
}

void DegradationSpec::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw Error(std::string("degradation: ") + msg);
  };
  need(noise_floor >= 0, "noise_floor must be >= 0");
  switch (kind) {
    case DegradationKind::GaussianNoise: need(sigma >= 0 && sigma <= 1, "sigma must lie in [0, 1]"); break;
    case DegradationKind::SpeckleMix:
      need(sigma_g >= 0 && sigma_g <= 1 && sigma_s >= 0 && sigma_s <= 1, "speckle sigmas must lie in [0, 1]");
      break;
    case DegradationKind::DownsampleSR:
      need(factor >= 2 && factor <= 16, "factor must lie in [2, 16]");
      [[fallthrough]];
    case DegradationKind::GaussianBlur:
      need(kernel_size >= 1 && kernel_size % 2 == 1, "kernel_size must be odd and positive");
      need(kernel_sigma > 0, "kernel_sigma must be positive");
      break;
    case DegradationKind::JpegBlock: need(quality >= 1 && quality <= 99, "quality must lie in [1, 99]"); break;
    case DegradationKind::SmoothWarp:
      need(amplitude >= 0 && amplitude <= 8, "amplitude must lie in [0, 8] px");
      need(corr_len > 0, "corr_len must be positive");
      break;
  }
}

std::string DegradationSpec::params_json() const {
  nlohmann::ordered_json j;
  switch (kind) {
    case DegradationKind::GaussianNoise: j["sigma"] = sigma; break;
    case DegradationKind::SpeckleMix: j["sigma_g"] = sigma_g; j["sigma_s"] = sigma_s; break;
    case DegradationKind::DownsampleSR: j["factor"] = factor; [[fallthrough]];
    case DegradationKind::GaussianBlur: j["kernel_size"] = kernel_size; j["kernel_sigma"] = kernel_sigma; break;
    case DegradationKind::JpegBlock: j["quality"] = quality; break;
    case DegradationKind::SmoothWarp: j["amplitude"] = amplitude; j["corr_len"] = corr_len; break;
  }
  j["noise_floor"] = noise_floor;
  return j.dump();
}

DegradationSpec DegradationSpec::from_json(DegradationKind kind, const std::string& params,
                                           std::uint64_t seed) {
  DegradationSpec s;
  s.kind = kind;
  s.seed = seed;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(params.empty() ? "{}" : params);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("degradation params: ") + e.what());
  }
  if (!j.is_object()) throw Error("degradation params must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (!v.is_number()) throw Error("degradation param '" + key + "' must be a number");
    if (key == "sigma") s.sigma = v.get<double>();
    else if (key == "sigma_g") s.sigma_g = v.get<double>();
    else if (key == "sigma_s") s.sigma_s = v.get<double>();
    else if (key == "kernel_size") s.kernel_size = v.get<int>();
    else if (key == "kernel_sigma") s.kernel_sigma = v.get<double>();
    else if (key == "factor") s.factor = v.get<int>();
    else if (key == "quality") s.quality = v.get<int>();
    else if (key == "amplitude") s.amplitude = v.get<double>();
    else if (key == "corr_len") s.corr_len = v.get<double>();
    else if (key == "noise_floor") s.noise_floor = v.get<double>();
    else throw Error("unknown degradation param '" + key + "'");
  }
  s.validate();
  return s;
}

Image add_gaussian_noise(const Image& x, double sigma, std::uint64_t seed) {
  Philox rng(seed, kStreamNoise);
  Image y = x;
  if (sigma == 0) return y;
  for (double& v : y.storage()) v += sigma * rng.normal();
  return y;
}

Image speckle_mix(const Image& x, double sigma_g, double sigma_s, std::uint64_t seed) {
  Philox add(seed, kStreamNoise), mul(seed, kStreamSpeckle);
  Image y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] += sigma_g * add.normal() + x[i] * sigma_s * mul.normal();
  }
  return y;
}

Image gaussian_blur(const Image& x, int size, double sigma) {
  return convolve2d(x, gaussian_kernel(size, sigma), Border::Reflect);
}

Image downsample_sr(const Image& x, int factor, int size, double sigma) {
  if (x.height() % factor != 0 || x.width() % factor != 0) {
    throw Error("downsample_sr: image size must be divisible by the factor");
  }
  return resample(resample(gaussian_blur(x, size, sigma), factor, Resample::Down), factor,
                  Resample::Up);
}

Image smooth_warp(const Image& x, double amplitude, double corr_len, std::uint64_t seed) {
  const int h = x.height(), w = x.width();
  Philox rng(seed, kStreamWarp);
  std::vector<double> n[2];
  for (auto& f : n) {
    f.resize(static_cast<std::size_t>(h) * w);
    for (double& v : f) v = rng.normal();
  }
  // Gaussian-correlated displacement field, normalized to peak |d| = amplitude.
  std::vector<double> d[2];
  const double inv = 1.0 / (2.0 * corr_len * corr_len);
  for (int c = 0; c < 2; ++c) {
    d[c].assign(n[c].size(), 0.0);
    double peak = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int xx = 0; xx < w; ++xx) {
        double s = 0.0;
        for (int v = 0; v < h; ++v)
          for (int u = 0; u < w; ++u)
            s += n[c][static_cast<std::size_t>(v) * w + u] *
                 std::exp(-((v - y) * (v - y) + (u - xx) * (u - xx)) * inv);
        d[c][static_cast<std::size_t>(y) * w + xx] = s;
        peak = std::max(peak, std::abs(s));
      }
    }
    if (peak > 0)
      for (double& v : d[c]) v *= amplitude / peak;
  }
  Image out(h, w, x.channels());
  auto px = [&](int y, int xx, int c) {
    return x.at(std::clamp(y, 0, h - 1), std::clamp(xx, 0, w - 1), c);
  };
  for (int y = 0; y < h; ++y) {
    for (int xx = 0; xx < w; ++xx) {
      const std::size_t i = static_cast<std::size_t>(y) * w + xx;
      const double sy = y + d[0][i], sx = xx + d[1][i];
      const int y0 = static_cast<int>(std::floor(sy)), x0 = static_cast<int>(std::floor(sx));
      const double fy = sy - y0, fx = sx - x0;
      for (int c = 0; c < x.channels(); ++c) {
        out.at(y, xx, c) = (1 - fy) * ((1 - fx) * px(y0, x0, c) + fx * px(y0, x0 + 1, c)) +
                           fy * ((1 - fx) * px(y0 + 1, x0, c) + fx * px(y0 + 1, x0 + 1, c));
      }
    }
  }
  return out;
}

QuantTable jpeg_quant_table(int quality) {
  if (quality < 1 || quality > 99) throw Error("jpeg: quality must lie in [1, 99]");
  const double scale = (100.0 - quality) / 50.0;
  QuantTable t{};
  for (int i = 0; i < 64; ++i) t[i] = std::max(1.0, std::floor(kLuminance[i] * scale + 0.5));
  return t;
}

std::array<double, 64> dct8x8(const std::array<double, 64>& b) {
  const auto& c = dct_basis();
  std::array<double, 64> tmp{}, out{};
  for (int u = 0; u < 8; ++u)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int y = 0; y < 8; ++y) s += c[u][y] * b[y * 8 + x];
      tmp[u * 8 + x] = s;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int x = 0; x < 8; ++x) s += tmp[u * 8 + x] * c[v][x];
      out[u * 8 + v] = s;
    }
  return out;
}

std::array<double, 64> idct8x8(const std::array<double, 64>& k) {
  const auto& c = dct_basis();
  std::array<double, 64> tmp{}, out{};
  for (int y = 0; y < 8; ++y)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += c[u][y] * k[u * 8 + v];
      tmp[y * 8 + v] = s;
    }
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += tmp[y * 8 + v] * c[v][x];
      out[y * 8 + x] = s;
    }
  return out;
}

Image jpeg_block(const Image& x, const QuantTable& table) {
  for (double q : table)
    if (!(q > 0)) throw Error("jpeg: quantization steps must be positive");
  const int h = x.height(), w = x.width();
  Image out = x;
  for (int c = 0; c < x.channels(); ++c) {
    for (int by = 0; by < h; by += 8) {
      for (int bx = 0; bx < w; bx += 8) {
        std::array<double, 64> blk{};
        for (int y = 0; y < 8; ++y)
          for (int xx = 0; xx < 8; ++xx)
            blk[y * 8 + xx] = 255.0 * x.at(std::min(by + y, h - 1), std::min(bx + xx, w - 1), c);
        auto coef = dct8x8(blk);
        for (int i = 0; i < 64; ++i) coef[i] = std::nearbyint(coef[i] / table[i]) * table[i];
        const auto rec = idct8x8(coef);
        for (int y = 0; y < 8 && by + y < h; ++y)
          for (int xx = 0; xx < 8 && bx + xx < w; ++xx)
            out.at(by + y, bx + xx, c) = rec[y * 8 + xx] / 255.0;
      }
    }
  }
  return out;
}

Image apply(const DegradationSpec& spec, const Image& x) {
  spec.validate();
  Image y;
  switch (spec.kind) {
    case DegradationKind::GaussianNoise: y = add_gaussian_noise(x, spec.sigma, spec.seed); break;
    case DegradationKind::SpeckleMix: y = speckle_mix(x, spec.sigma_g, spec.sigma_s, spec.seed); break;
    case DegradationKind::GaussianBlur: y = gaussian_blur(x, spec.kernel_size, spec.kernel_sigma); break;
    case DegradationKind::DownsampleSR:
      y = downsample_sr(x, spec.factor, spec.kernel_size, spec.kernel_sigma);
      break;
    case DegradationKind::JpegBlock: y = jpeg_block(x, jpeg_quant_table(spec.quality)); break;
    case DegradationKind::SmoothWarp: y = smooth_warp(x, spec.amplitude, spec.corr_len, spec.seed); break;
  }
  if (spec.noise_floor > 0) {
    Philox rng(spec.seed, kStreamFloor);
    for (double& v : y.storage()) v += spec.noise_floor * rng.normal();
  }
  return y;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& rows) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path.string() + "' for writing");
  os << "clean_path\tdegraded_path\tkind\tparams\tseed\n";
  for (const auto& r : rows) {
    os << r.clean_path << '\t' << r.degraded_path << '\t' << r.kind << '\t' << r.params << '\t'
       << r.seed << '\n';
  }
  if (!os) throw Error("write failed for '" + path.string() + "'");
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open manifest '" + path.string() + "'");
  std::string line;
  if (!std::getline(is, line) || line.rfind("clean_path\t", 0) != 0) {
    throw Error(path.string() + ": missing manifest header");
  }
  std::vector<ManifestEntry> rows;
  long lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      f.push_back(line.substr(start, tab - start));
    }
    f.push_back(line.substr(start));
    if (f.size() != 5) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected 5 tab-separated fields");
    }
    ManifestEntry r{f[0], f[1], f[2], f[3], 0};
    try {
      r.seed = std::stoull(f[4]);
    } catch (const std::exception&) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": bad seed '" + f[4] + "'");
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ManifestEntry> make_benchmark(const Dataset& data, int count,
                                          const std::vector<DegradationSpec>& specs,
                                          const std::filesystem::path& out_dir,
                                          std::uint64_t first_index) {
  if (count < 1) throw Error("benchmark: need at least one image");
  for (const auto& s : specs) s.validate();
  std::filesystem::create_directories(out_dir);
  std::vector<ManifestEntry> rows;
  for (int i = 0; i < count; ++i) {
    const Image x = data.sample(first_index + static_cast<std::uint64_t>(i));
    const std::string clean = "clean_" + std::to_string(i) + ".dimg";
    save_dimg(out_dir / clean, x);
    if (specs.empty()) rows.push_back({clean, "", "clean", "{}", 0});
    for (std::size_t j = 0; j < specs.size(); ++j) {
      DegradationSpec s = specs[j];
      s.seed = derive_seed(specs[j].seed, static_cast<std::uint64_t>(i));
      const std::string deg = "deg_" + std::to_string(i) + "_" + kind_name(s.kind) + "_" +
                              std::to_string(j) + ".dimg";
      save_dimg(out_dir / deg, apply(s, x));
      rows.push_back({clean, deg, kind_name(s.kind), s.params_json(), s.seed});
    }
  }
  write_manifest(out_dir / "manifest.tsv", rows);
  return rows;
}

}  // namespace diip
