#pragma once

#include <Eigen/Core>

#include "anwm/geometry.hpp"

namespace anwm::wm {

/// Period of the k-th action frequency: kActionBasePeriod * kActionPeriodRatio^k.
inline constexpr double kActionBasePeriod = 2.0;
inline constexpr double kActionPeriodRatio = 2.0;

/// Sine-cosine features of an action. Each of the four components uses
/// dim / 8 frequencies; component c, frequency k occupies
/// [c * dim/4 + 2k] = sin(2 pi a_c / P_k), [c * dim/4 + 2k + 1] = cos(...).
/// `dim` must be a positive multiple of 8.
Eigen::VectorXd action_features(const Action4& a, int dim);

/// Transformer-style diffusion step embedding: first half cos, second half
/// sin, frequencies exp(-ln(10000) * i / (dim / 2)).
Eigen::VectorXd timestep_features(double step, int dim);

/// action_features(a) + timestep_features(step).
Eigen::VectorXd embed_action(const Action4& a, double step, int dim);

}  // namespace anwm::wm
