#pragma once

#include <span>
#include <vector>

namespace diip {

struct AdamConfig {
  double lr = 0.0015;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments for one flat parameter vector.
struct AdamState {
  AdamConfig cfg;
  std::vector<double> m, v;
  long step = 0;

  AdamState() = default;
  AdamState(AdamConfig c, std::size_t n) : cfg(c), m(n, 0.0), v(n, 0.0) {}
};

/// One bias-corrected Adam update of x in place.
void adam_update(std::span<double> x, std::span<const double> grad, AdamState& st);

}  // namespace diip
