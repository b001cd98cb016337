#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "anwm/wm/trainer.hpp"

namespace anwm::testing {

struct GroupError {
  std::string name;
  double analytic_norm;
  double numeric_norm;
  double error;  // relative, or absolute for groups whose gradient vanishes
  bool relative;
};

/// Central differences of the noise-prediction loss against the analytic
/// gradient, per parameter tensor. Groups whose gradient norm is below
/// `zero_floor` on both sides are compared absolutely.
inline std::vector<GroupError> gradient_errors(wm::WorldModel<double>& model, const wm::LatentGrid<double>& x_t,
                                               const wm::Conditioning<double>& cond, const Action4& a, int step,
                                               const wm::LatentGrid<double>& eps, double h = 1e-5,
                                               double zero_floor = 1e-7) {
  auto grads = model.params().zeros();
  model.loss(x_t, cond, a, step, eps, &grads);
  std::vector<GroupError> out;
  auto& p = model.params();
  for (std::size_t i = 0; i < p.size(); ++i) {
    auto& m = p[i];
    Eigen::MatrixXd fd(m.rows(), m.cols());
    for (long r = 0; r < m.rows(); ++r)
      for (long c = 0; c < m.cols(); ++c) {
        const double orig = m(r, c);
        m(r, c) = orig + h;
        const double lp = model.loss(x_t, cond, a, step, eps, nullptr);
        m(r, c) = orig - h;
        const double lm = model.loss(x_t, cond, a, step, eps, nullptr);
        m(r, c) = orig;
        fd(r, c) = (lp - lm) / (2 * h);
      }
    const double an = grads[i].norm(), nu = fd.norm(), diff = (grads[i] - fd).norm();
    const double scale = std::max(an, nu);
    const bool rel = scale > zero_floor;
    out.push_back({p.name(i), an, nu, rel ? diff / scale : diff, rel});
  }
  return out;
}

}  // namespace anwm::testing
