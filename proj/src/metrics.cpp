#include "anwm/metrics.hpp"

#include <cmath>

#include "anwm/errors.hpp"

namespace anwm {
namespace {

void check_same_size(const FrameRGBD& a, const FrameRGBD& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw InvalidArgument("image metrics: dimension mismatch");
  for (int c = 0; c < 3; ++c)
    if (a.rgb[c].rows() != a.height() || a.rgb[c].cols() != a.width() || b.rgb[c].rows() != b.height() ||
        b.rgb[c].cols() != b.width())
      throw InvalidArgument("image metrics: colour plane size mismatch");
}

void check_trajectories(std::span<const Pose4> est, std::span<const Pose4> gt) {
  if (est.size() != gt.size()) throw InvalidArgument("trajectory metrics: length mismatch");
  if (est.empty()) throw InvalidArgument("trajectory metrics: empty trajectory");
}

// Sums over every k x k window via a summed-area table.
Eigen::ArrayXXd box_sums(const Eigen::ArrayXXd& x, int k) {
  const long h = x.rows(), w = x.cols();
  Eigen::ArrayXXd s = Eigen::ArrayXXd::Zero(h + 1, w + 1);
  for (long i = 0; i < h; ++i)
    for (long j = 0; j < w; ++j) s(i + 1, j + 1) = x(i, j) + s(i, j + 1) + s(i + 1, j) - s(i, j);
  Eigen::ArrayXXd out(h - k + 1, w - k + 1);
  for (long i = 0; i + k <= h; ++i)
    for (long j = 0; j + k <= w; ++j) out(i, j) = s(i + k, j + k) - s(i, j + k) - s(i + k, j) + s(i, j);
  return out;
}

}  // namespace

double mse(const FrameRGBD& a, const FrameRGBD& b) {
  check_same_size(a, b);
  double sum = 0;
  for (int c = 0; c < 3; ++c) sum += (a.rgb[c].cast<double>() - b.rgb[c].cast<double>()).square().sum();
  return sum / (3.0 * a.width() * a.height());
}

double psnr_from_mse(double m) {
  if (m < 0 || !std::isfinite(m)) throw InvalidArgument("psnr: mse must be finite and >= 0");
  if (m == 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / m));
}

double ssim(const Plane& a, const Plane& b) {
  constexpr int k = 7;
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw InvalidArgument("ssim: dimension mismatch");
  if (a.rows() < k || a.cols() < k) throw InvalidArgument("ssim: images must be at least 7x7");
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03, n = k * k;
  const Eigen::ArrayXXd x = a.cast<double>(), y = b.cast<double>();
  const Eigen::ArrayXXd mx = box_sums(x, k) / n, my = box_sums(y, k) / n;
  const Eigen::ArrayXXd sxx = box_sums(x * x, k) / n - mx * mx;
  const Eigen::ArrayXXd syy = box_sums(y * y, k) / n - my * my;
  const Eigen::ArrayXXd sxy = box_sums(x * y, k) / n - mx * my;
  const Eigen::ArrayXXd map =
      ((2 * mx * my + c1) * (2 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean();
}

double ssim(const FrameRGBD& a, const FrameRGBD& b) {
  check_same_size(a, b);
  double s = 0;
  for (int c = 0; c < 3; ++c) s += ssim(a.rgb[c], b.rgb[c]);
  return s / 3.0;
}

ImageMetrics image_metrics(const FrameRGBD& pred, const FrameRGBD& gt) {
  ImageMetrics m;
  m.mse = mse(pred, gt);
  m.psnr = psnr_from_mse(m.mse);
  m.ssim = ssim(pred, gt);
  return m;
}

double ate(std::span<const Pose4> est, std::span<const Pose4> gt) {
  check_trajectories(est, gt);
  double sum = 0;
  for (std::size_t i = 0; i < est.size(); ++i) sum += (est[i].position() - gt[i].position()).squaredNorm();
  return std::sqrt(sum / static_cast<double>(est.size()));
}

double rpe(std::span<const Pose4> est, std::span<const Pose4> gt, int delta) {
  check_trajectories(est, gt);
  if (delta < 1 || est.size() <= static_cast<std::size_t>(delta))
    throw InvalidArgument("rpe: trajectories must be longer than the step interval");
  double sum = 0;
  const std::size_t n = est.size() - static_cast<std::size_t>(delta);
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d de = est[i + delta].position() - est[i].position();
    const Eigen::Vector3d dg = gt[i + delta].position() - gt[i].position();
    sum += (de - dg).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(n));
}

double rpe_yaw(std::span<const Pose4> est, std::span<const Pose4> gt, int delta) {
  check_trajectories(est, gt);
  if (delta < 1 || est.size() <= static_cast<std::size_t>(delta))
    throw InvalidArgument("rpe: trajectories must be longer than the step interval");
  double sum = 0;
  const std::size_t n = est.size() - static_cast<std::size_t>(delta);
  for (std::size_t i = 0; i < n; ++i) {
    const double de = normalize_angle(est[i + delta].yaw - est[i].yaw);
    const double dg = normalize_angle(gt[i + delta].yaw - gt[i].yaw);
    const double d = normalize_angle(de - dg);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(n));
}

NavOutcome nav_outcome(const Pose4& final_pose, const Pose4& goal, double threshold) {
  if (!(threshold > 0)) throw InvalidArgument("nav_outcome: threshold must be positive");
  NavOutcome o;
  o.ne = (final_pose.position() - goal.position()).norm();
  o.success = o.ne < threshold;
  return o;
}

}  // namespace anwm
