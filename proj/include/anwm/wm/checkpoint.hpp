#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>

#include "anwm/wm/model.hpp"
#include "anwm/wm/trainer.hpp"

namespace anwm::wm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::unique_ptr<WorldModel<float>> model;
  TrainConfig train;
  long steps_done = 0;
};

/// Layout (little endian):
///   "ANWMCKPT" | u32 version | u32 n | n bytes config JSON
///   u32 tensors | per tensor: u32 name length, name, u32 rows, u32 cols, rows*cols f32 (row-major)
void save_checkpoint(const std::filesystem::path& path, const WorldModel<float>& model, const TrainConfig& train,
                     long steps_done);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace anwm::wm
