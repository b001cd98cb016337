#pragma once

#include <span>

#include "anwm/frame.hpp"
#include "anwm/geometry.hpp"

namespace anwm {

inline constexpr double kPsnrCap = 99.0;

struct ImageMetrics {
  double mse = 0;
  double psnr = 0;  // dB, capped at kPsnrCap
  double ssim = 0;
};

/// Mean squared error over all colour values.
double mse(const FrameRGBD& a, const FrameRGBD& b);
/// 10 log10(1 / mse), kPsnrCap when the images are identical.
double psnr_from_mse(double mse);
/// Mean SSIM over channels: 7x7 uniform windows fully inside the image,
/// K1 = 0.01, K2 = 0.03, dynamic range 1.
double ssim(const FrameRGBD& a, const FrameRGBD& b);
double ssim(const Plane& a, const Plane& b);
ImageMetrics image_metrics(const FrameRGBD& pred, const FrameRGBD& gt);

/// RMS position error without alignment.
double ate(std::span<const Pose4> est, std::span<const Pose4> gt);
/// RMS of translation-delta differences over step interval `delta`.
double rpe(std::span<const Pose4> est, std::span<const Pose4> gt, int delta = 1);
/// RMS of wrapped yaw-delta differences over `delta` (radians, informational).
double rpe_yaw(std::span<const Pose4> est, std::span<const Pose4> gt, int delta = 1);

struct NavOutcome {
  double ne = 0;
  bool success = false;
};

/// Success is ne < threshold (strict).
NavOutcome nav_outcome(const Pose4& final_pose, const Pose4& goal, double threshold = 20.0);

}  // namespace anwm
