#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "diip/datasets.hpp"
#include "diip/image.hpp"

namespace diip {

enum class DegradationKind { GaussianNoise, SpeckleMix, GaussianBlur, DownsampleSR, JpegBlock, SmoothWarp };

const char* kind_name(DegradationKind k);
DegradationKind parse_kind(const std::string& name);

/// One forward model. Fields not used by `kind` are ignored (and omitted
/// from the params JSON).
struct DegradationSpec {
  DegradationKind kind = DegradationKind::GaussianNoise;
  double sigma = 0.1;          // gaussian_noise
  double sigma_g = 0.2;        // speckle_mix additive part
  double sigma_s = 0.22;       // speckle_mix multiplicative part
  int kernel_size = 9;         // gaussian_blur, downsample_sr
  double kernel_sigma = 2.0;   // gaussian_blur, downsample_sr
  int factor = 4;              // downsample_sr
  int quality = 5;             // jpeg_block
  double amplitude = 2.0;      // smooth_warp, px
  double corr_len = 4.0;       // smooth_warp, px
  double noise_floor = 0.02;   // additive Gaussian after every kind; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
  std::string params_json() const;
  static DegradationSpec from_json(DegradationKind kind, const std::string& params,
                                   std::uint64_t seed);
};

Image apply(const DegradationSpec& spec, const Image& x);

// The operators without the noise floor.
Image add_gaussian_noise(const Image& x, double sigma, std::uint64_t seed);
Image speckle_mix(const Image& x, double sigma_g, double sigma_s, std::uint64_t seed);
Image gaussian_blur(const Image& x, int size, double sigma);
Image downsample_sr(const Image& x, int factor, int size, double sigma);
Image smooth_warp(const Image& x, double amplitude, double corr_len, std::uint64_t seed);

/// Quantization steps on the 0..255 scale, row-major 8x8.
using QuantTable = std::array<double, 64>;
/// Standard luminance table times (100 - q) / 50, each step at least 1.
QuantTable jpeg_quant_table(int quality);
/// Per channel, per 8x8 block (edge blocks padded by replication): orthonormal
/// DCT of 255 x, round to multiples of the table, inverse DCT. No clamping.
Image jpeg_block(const Image& x, const QuantTable& table);
/// Orthonormal 8x8 DCT-II of one block, used by the lattice checks.
std::array<double, 64> dct8x8(const std::array<double, 64>& block);
std::array<double, 64> idct8x8(const std::array<double, 64>& coeffs);

struct ManifestEntry {
  std::string clean_path;
  std::string degraded_path;  // empty for clean-only rows
  std::string kind;
  std::string params;  // JSON object
  std::uint64_t seed = 0;
};

/// Tab-separated with a header row; paths are relative to the manifest.
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& rows);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Writes clean_<i>.dimg for i < count and, per spec j, deg_<i>_<kind>_<j>.dimg
/// degraded with seed derive_seed(spec.seed, i). Returns the manifest rows
/// (also written to out_dir/manifest.tsv).
std::vector<ManifestEntry> make_benchmark(const Dataset& data, int count,
                                          const std::vector<DegradationSpec>& specs,
                                          const std::filesystem::path& out_dir,
                                          std::uint64_t first_index = 0);

}  // namespace diip
