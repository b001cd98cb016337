#include "anwm/wm/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "anwm/errors.hpp"

namespace anwm::wm {

NoiseSchedule::NoiseSchedule(int steps) : steps_(steps) {
  if (steps <= 0) throw InvalidArgument("noise schedule: steps must be positive");
}

double NoiseSchedule::angle(int t) const {
  if (t < 0 || t > steps_) throw InvalidArgument("noise schedule: step out of range");
  constexpr double s = 0.008;
  return (static_cast<double>(t) / steps_ + s) / (1.0 + s) * (std::numbers::pi / 2.0);
}

double NoiseSchedule::signal(int t) const { return std::cos(angle(t)); }
double NoiseSchedule::noise(int t) const { return std::sin(angle(t)); }

std::vector<int> NoiseSchedule::sampling_steps(int count) const {
  count = std::clamp(count, 1, steps_);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = count; i >= 1; --i) {
    const int t = static_cast<int>(std::lround(static_cast<double>(steps_) * i / count));
    if (out.empty() || t != out.back()) out.push_back(std::max(t, 1));
  }
  return out;
}

}  // namespace anwm::wm
