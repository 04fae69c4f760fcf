#include "diip/adam.hpp"

#include <cmath>

#include "diip/image.hpp"

namespace diip {

void adam_update(std::span<double> x, std::span<const double> grad, AdamState& st) {
  if (x.size() != grad.size() || x.size() != st.m.size() || x.size() != st.v.size()) {
    throw Error("adam: size mismatch");
  }
  const auto& c = st.cfg;
  ++st.step;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < x.size(); ++i) {
    st.m[i] = c.beta1 * st.m[i] + (1.0 - c.beta1) * grad[i];
    st.v[i] = c.beta2 * st.v[i] + (1.0 - c.beta2) * grad[i] * grad[i];
    const double mh = st.m[i] / bc1;
    const double vh = st.v[i] / bc2;
    x[i] -= c.lr * mh / (std::sqrt(vh) + c.eps);
  }
}

}  // namespace diip
