#pragma once

#include <array>
#include <cstdint>

#include "diip/image.hpp"

namespace diip {

/// Counter-based Philox4x32-10 stream. The output at position n depends only on
/// (key, stream, n), so draws are reproducible and order-independent across streams.
class Philox {
 public:
  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) : key_(seed), stream_(stream) {}

  std::uint32_t next_u32();
  /// Uniform in the open interval (0, 1).
  double uniform();
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t counter() const { return counter_; }

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key);

 private:
  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buf_{};
  int buf_pos_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Derives an independent seed for a named sub-purpose.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt);

Image normal_image(int height, int width, int channels, Philox& rng, double stddev = 1.0);

}  // namespace diip
