#include "anwm/wm/embedding.hpp"

#include <cmath>
#include <string>

#include "anwm/errors.hpp"

namespace anwm::wm {

Eigen::VectorXd action_features(const Action4& a, int dim) {
  if (dim <= 0 || dim % 8 != 0) throw InvalidArgument("action embedding: dim must be a positive multiple of 8");
  const int freqs = dim / 8;
  const Eigen::Vector4d v = a.vec();
  Eigen::VectorXd out(dim);
  for (int c = 0; c < 4; ++c) {
    double period = kActionBasePeriod;
    for (int k = 0; k < freqs; ++k, period *= kActionPeriodRatio) {
      const double phase = 2.0 * kPi * v[c] / period;
      out[c * (dim / 4) + 2 * k] = std::sin(phase);
      out[c * (dim / 4) + 2 * k + 1] = std::cos(phase);
    }
  }
  return out;
}

Eigen::VectorXd timestep_features(double step, int dim) {
  if (dim <= 0 || dim % 2 != 0) throw InvalidArgument("timestep embedding: dim must be even");
  const int half = dim / 2;
  Eigen::VectorXd out(dim);
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    out[i] = std::cos(step * freq);
    out[half + i] = std::sin(step * freq);
  }
  return out;
}

Eigen::VectorXd embed_action(const Action4& a, double step, int dim) {
  return action_features(a, dim) + timestep_features(step, dim);
}

}  // namespace anwm::wm
