#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "anwm/dataset.hpp"
#include "anwm/rng.hpp"
#include "anwm/wm/model.hpp"

namespace anwm::wm {

struct TrainConfig {
  double learning_rate = 8e-5;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 8;
  int steps = 1000;
  double grad_clip = 1.0;  // global norm, <= 0 disables
  std::string lr_schedule = "constant";  // constant | cosine (decays to 0 over `steps`)
  std::uint64_t seed = 0;

  void validate() const;
  /// Learning rate for the 0-based optimizer step `step`.
  double learning_rate_at(long step) const;
  bool operator==(const TrainConfig&) const = default;
};

std::string to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base = {});

/// One supervised example: m past frames, the FFP prior toward the target
/// pose, the action into the target and the true target frame.
struct TrainingWindow {
  std::vector<FrameRGBD> past;
  FrameRGBD prior;
  Action4 action;
  FrameRGBD target;
};

/// Windows for every target index t in [first, last] (clamped to
/// [context, frames - 1]); last < 0 means the final frame.
std::vector<TrainingWindow> make_windows(const Clip& clip, const ModelConfig& config, int first = 0, int last = -1);

template <typename Scalar>
struct EncodedWindow {
  Conditioning<Scalar> cond;
  LatentGrid<Scalar> target;
  Action4 action;
};

template <typename Scalar>
std::vector<EncodedWindow<Scalar>> encode_windows(const WorldModel<Scalar>& model,
                                                  std::span<const TrainingWindow> windows);

/// Decoupled-weight-decay Adam over a ParameterSet.
template <typename Scalar>
class AdamW {
 public:
  AdamW(const nn::ParameterSet<Scalar>& params, const TrainConfig& config);
  void step(nn::ParameterSet<Scalar>& params, const nn::Gradients<Scalar>& grads);
  long iterations() const { return t_; }

 private:
  TrainConfig config_;
  nn::Gradients<Scalar> m_, v_;
  long t_ = 0;
};

template <typename Scalar>
class Trainer {
 public:
  Trainer(WorldModel<Scalar>& model, const TrainConfig& config);

  /// Draws t uniformly from 1..T and noise per window, forms
  /// x_t = signal(t) x_0 + noise(t) eps, averages the noise-prediction MSE
  /// over the batch and applies one optimizer step. Returns the batch loss.
  /// Throws TrainingDiverged on a non-finite loss or gradient.
  double train_step(std::span<const EncodedWindow<Scalar>> batch, Rng& rng);

  /// Runs config().steps steps over `windows`, sampling batches with
  /// replacement from a generator derived from the config seed. `on_step`
  /// receives (step, loss) when set.
  template <typename Callback>
  double fit(std::span<const EncodedWindow<Scalar>> windows, Callback&& on_step);

  const TrainConfig& config() const { return config_; }
  long steps_done() const { return opt_.iterations(); }

 private:
  WorldModel<Scalar>& model_;
  TrainConfig config_;
  AdamW<Scalar> opt_;
};

/// Noise-prediction loss on a fixed stratified probe: for every window,
/// `levels` steps spread evenly over 1..T with noise drawn from `seed`.
template <typename Scalar>
double evaluation_loss(const WorldModel<Scalar>& model, std::span<const EncodedWindow<Scalar>> windows,
                       int levels = 10, std::uint64_t seed = 0);

/// x_t = signal(t) x_0 + noise(t) eps.
template <typename Scalar>
LatentGrid<Scalar> add_noise(const NoiseSchedule& schedule, const LatentGrid<Scalar>& x0, const LatentGrid<Scalar>& eps,
                             int t);

template <typename Scalar>
LatentGrid<Scalar> gaussian_latent(int c, int h, int w, Rng& rng);

template <typename Scalar>
template <typename Callback>
double Trainer<Scalar>::fit(std::span<const EncodedWindow<Scalar>> windows, Callback&& on_step) {
  Rng rng(derive_seed(config_.seed, "train"));
  double loss = 0;
  std::vector<EncodedWindow<Scalar>> batch;
  for (int s = 0; s < config_.steps; ++s) {
    batch.clear();
    for (int b = 0; b < config_.batch_size; ++b)
      batch.push_back(windows[static_cast<std::size_t>(rng.uniform_int(0, static_cast<long>(windows.size()) - 1))]);
    loss = train_step(batch, rng);
    on_step(s, loss);
  }
  return loss;
}

extern template class AdamW<float>;
extern template class AdamW<double>;
extern template class Trainer<float>;
extern template class Trainer<double>;

}  // namespace anwm::wm
