#pragma once

#include <vector>

namespace anwm::wm {

/// Variance-preserving cosine schedule over integer steps 0..T:
///   angle(t) = (t / T + 0.008) / 1.008 * pi / 2
///   signal(t) = cos(angle(t)),  noise(t) = sin(angle(t)).
/// x_t = signal(t) * x_0 + noise(t) * eps. Training draws t from 1..T.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(int steps = 250);

  int steps() const { return steps_; }
  double angle(int t) const;
  double signal(int t) const;
  double noise(int t) const;

  /// `count` decreasing steps from T to 1 (evenly spaced, rounded), the
  /// sampler's evaluation points.
  std::vector<int> sampling_steps(int count) const;

 private:
  int steps_;
};

}  // namespace anwm::wm
