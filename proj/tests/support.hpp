#pragma once

#include <filesystem>
#include <string>

#include "anwm/dataset.hpp"
#include "anwm/errors.hpp"
#include "anwm/frame.hpp"
#include "anwm/rng.hpp"
#include "anwm/scene.hpp"

namespace anwm::testing {

inline Intrinsics square_intrinsics(int size, double hfov_deg = 90.0) {
  return Intrinsics::from_fov(size, size, hfov_deg * kPi / 180.0);
}

/// Random walk of `length` actions in the scene built from `seed`.
inline Clip make_clip(std::uint64_t seed, int length, int size, const SceneConfig& cfg = {}) {
  const Scene scene = build_scene(seed, cfg);
  Rng rng(derive_seed(seed, "test-start"));
  for (int attempt = 0;; ++attempt) {
    TrajectorySpec spec;
    spec.start = sample_free_pose(scene, rng, spec.clearance, 10.0, 40.0);
    spec.seed = derive_seed(seed, static_cast<std::uint64_t>(attempt));
    spec.length = length;
    spec.intrinsics = square_intrinsics(size);
    try {
      return generate_trajectory(scene, spec);
    } catch (const GenerationStuck&) {
      if (attempt > 20) throw;
    }
  }
}

/// Quantized colours, depth in [1, 50), roughly 80% valid.
inline FrameRGBD random_frame(int w, int h, Rng& rng) {
  FrameRGBD f = FrameRGBD::blank(w, h);
  for (int v = 0; v < h; ++v)
    for (int u = 0; u < w; ++u) {
      for (int c = 0; c < 3; ++c) f.rgb[c](v, u) = quantize8(static_cast<float>(rng.uniform()));
      f.valid(v, u) = rng.uniform() < 0.8;
      f.depth(v, u) = f.valid(v, u) ? static_cast<float>(rng.uniform(1.0, 50.0)) : 0.f;
    }
  return f;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("anwm_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace anwm::testing
