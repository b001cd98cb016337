#include "anwm/wm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "anwm/errors.hpp"
#include "anwm/ffp.hpp"

namespace anwm::wm {

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw InvalidArgument("train config: " + m); };
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) fail("learning_rate must be finite and >= 0");
  if (!(weight_decay >= 0)) fail("weight_decay must be >= 0");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1)) fail("betas must be in [0, 1)");
  if (!(epsilon > 0)) fail("epsilon must be positive");
  if (batch_size <= 0) fail("batch_size must be positive");
  if (steps < 0) fail("steps must be >= 0");
  if (lr_schedule != "constant" && lr_schedule != "cosine") fail("lr_schedule must be constant or cosine");
}

double TrainConfig::learning_rate_at(long step) const {
  if (lr_schedule == "constant" || steps <= 0) return learning_rate;
  const double progress = std::min(1.0, static_cast<double>(step) / steps);
  return learning_rate * 0.5 * (1.0 + std::cos(kPi * progress));
}

std::string to_json(const TrainConfig& c) {
  nlohmann::json j = {{"learning_rate", c.learning_rate}, {"weight_decay", c.weight_decay},
                      {"beta1", c.beta1},                 {"beta2", c.beta2},
                      {"epsilon", c.epsilon},             {"batch_size", c.batch_size},
                      {"steps", c.steps},                 {"grad_clip", c.grad_clip},
                      {"lr_schedule", c.lr_schedule},     {"seed", c.seed}};
  return j.dump(2);
}

TrainConfig train_config_from_json(const std::string& text, const TrainConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("train config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("train config: expected a JSON object");
  TrainConfig c = base;
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "learning_rate") c.learning_rate = val.get<double>();
      else if (key == "weight_decay") c.weight_decay = val.get<double>();
      else if (key == "beta1") c.beta1 = val.get<double>();
      else if (key == "beta2") c.beta2 = val.get<double>();
      else if (key == "epsilon") c.epsilon = val.get<double>();
      else if (key == "batch_size") c.batch_size = val.get<int>();
      else if (key == "steps") c.steps = val.get<int>();
      else if (key == "grad_clip") c.grad_clip = val.get<double>();
      else if (key == "lr_schedule") c.lr_schedule = val.get<std::string>();
      else if (key == "seed") c.seed = val.get<std::uint64_t>();
      else throw InvalidArgument("train config: unknown key " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<TrainingWindow> make_windows(const Clip& clip, const ModelConfig& config, int first, int last) {
  const int n = static_cast<int>(clip.frames.size());
  const int m = config.context;
  if (last < 0 || last > n - 1) last = n - 1;
  if (first < m) first = m;
  std::vector<Observation> obs;
  for (int i = 0; i < n; ++i) obs.push_back({clip.frames[i], clip.poses[i]});
  std::vector<TrainingWindow> out;
  for (int t = first; t <= last; ++t) {
    TrainingWindow w;
    w.past.assign(clip.frames.begin() + (t - m), clip.frames.begin() + t);
    const std::span<const Observation> ctx(obs.data() + (t - m), static_cast<std::size_t>(m));
    w.prior = future_frame_projection(ctx, clip.poses[t], clip.intrinsics,
                                      static_cast<std::size_t>(config.ffp_context));
    w.action = clip.actions[t - 1];
    w.target = clip.frames[t];
    out.push_back(std::move(w));
  }
  return out;
}

template <typename Scalar>
std::vector<EncodedWindow<Scalar>> encode_windows(const WorldModel<Scalar>& model,
                                                  std::span<const TrainingWindow> windows) {
  std::vector<EncodedWindow<Scalar>> out;
  out.reserve(windows.size());
  for (const auto& w : windows)
    out.push_back({model.encode_condition(w.past, w.prior), model.codec().encode(w.target).template cast<Scalar>(),
                   w.action});
  return out;
}

template <typename Scalar>
LatentGrid<Scalar> gaussian_latent(int c, int h, int w, Rng& rng) {
  LatentGrid<Scalar> g(c, h, w);
  for (long j = 0; j < g.tokens.cols(); ++j)
    for (long i = 0; i < g.tokens.rows(); ++i) g.tokens(i, j) = static_cast<Scalar>(rng.normal());
  return g;
}

template <typename Scalar>
LatentGrid<Scalar> add_noise(const NoiseSchedule& schedule, const LatentGrid<Scalar>& x0, const LatentGrid<Scalar>& eps,
                             int t) {
  const auto s = static_cast<Scalar>(schedule.signal(t));
  const auto n = static_cast<Scalar>(schedule.noise(t));
  return {x0.channels, x0.height, x0.width, s * x0.tokens + n * eps.tokens};
}

// ---------------------------------------------------------------------------

template <typename Scalar>
AdamW<Scalar>::AdamW(const nn::ParameterSet<Scalar>& params, const TrainConfig& config)
    : config_(config), m_(params.zeros()), v_(params.zeros()) {
  config_.validate();
}

template <typename Scalar>
void AdamW<Scalar>::step(nn::ParameterSet<Scalar>& params, const nn::Gradients<Scalar>& grads) {
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1 - std::pow(b2, static_cast<double>(t_));
  const auto lr = static_cast<Scalar>(config_.learning_rate_at(t_ - 1));
  const auto wd = static_cast<Scalar>(config_.weight_decay);
  const auto eps = static_cast<Scalar>(config_.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = static_cast<Scalar>(b1) * m_[i] + static_cast<Scalar>(1 - b1) * grads[i];
    v_[i] = static_cast<Scalar>(b2) * v_[i] + static_cast<Scalar>(1 - b2) * grads[i].cwiseAbs2();
    const auto mhat = m_[i].array() / static_cast<Scalar>(c1);
    const auto vhat = v_[i].array() / static_cast<Scalar>(c2);
    params[i].array() -= lr * (mhat / (vhat.sqrt() + eps) + wd * params[i].array());
  }
}

template <typename Scalar>
Trainer<Scalar>::Trainer(WorldModel<Scalar>& model, const TrainConfig& config)
    : model_(model), config_(config), opt_(model.params(), config) {}

template <typename Scalar>
double Trainer<Scalar>::train_step(std::span<const EncodedWindow<Scalar>> batch, Rng& rng) {
  if (batch.empty()) throw InvalidArgument("train_step: empty batch");
  const auto& sched = model_.schedule();
  auto grads = model_.params().zeros();
  double total = 0;
  std::vector<int> steps;
  for (const auto& w : batch) {
    const int t = static_cast<int>(rng.uniform_int(1, sched.steps()));
    steps.push_back(t);
    const auto eps = gaussian_latent<Scalar>(w.target.channels, w.target.height, w.target.width, rng);
    total += static_cast<double>(model_.loss(add_noise(sched, w.target, eps, t), w.cond, w.action, t, eps, &grads));
  }
  const double loss = total / static_cast<double>(batch.size());
  const auto inv = static_cast<Scalar>(1.0 / static_cast<double>(batch.size()));
  double norm2 = 0;
  for (auto& g : grads) {
    g *= inv;
    norm2 += static_cast<double>(g.squaredNorm());
  }
  if (!std::isfinite(loss) || !std::isfinite(norm2)) {
    std::ostringstream dump;
    dump << "training diverged at step " << opt_.iterations() << ": loss=" << loss << " grad_norm=" << std::sqrt(norm2)
         << " diffusion_steps=[";
    for (std::size_t i = 0; i < steps.size(); ++i) dump << (i ? "," : "") << steps[i];
    dump << "]";
    const auto& p = model_.params();
    for (std::size_t i = 0; i < p.size(); ++i)
      if (!p[i].allFinite() || !grads[i].allFinite()) dump << " non-finite:" << p.name(i);
    throw TrainingDiverged(dump.str());
  }
  if (config_.grad_clip > 0) {
    const double norm = std::sqrt(norm2);
    if (norm > config_.grad_clip)
      for (auto& g : grads) g *= static_cast<Scalar>(config_.grad_clip / norm);
  }
  opt_.step(model_.params(), grads);
  return loss;
}

template <typename Scalar>
double evaluation_loss(const WorldModel<Scalar>& model, std::span<const EncodedWindow<Scalar>> windows, int levels,
                       std::uint64_t seed) {
  if (windows.empty() || levels <= 0) throw InvalidArgument("evaluation_loss: need windows and levels > 0");
  const auto& sched = model.schedule();
  Rng rng(derive_seed(seed, "eval-loss"));
  double total = 0;
  for (const auto& w : windows) {
    for (int k = 0; k < levels; ++k) {
      const int t = 1 + static_cast<int>(std::lround((sched.steps() - 1) * (k + 0.5) / levels));
      const auto eps = gaussian_latent<Scalar>(w.target.channels, w.target.height, w.target.width, rng);
      total += static_cast<double>(model.loss(add_noise(sched, w.target, eps, t), w.cond, w.action, t, eps, nullptr));
    }
  }
  return total / static_cast<double>(windows.size() * static_cast<std::size_t>(levels));
}

#define ANWM_INSTANTIATE(S)                                                                                        \
  template class AdamW<S>;                                                                                         \
  template class Trainer<S>;                                                                                       \
  template std::vector<EncodedWindow<S>> encode_windows(const WorldModel<S>&, std::span<const TrainingWindow>);     \
  template LatentGrid<S> gaussian_latent<S>(int, int, int, Rng&);                                                  \
  template LatentGrid<S> add_noise(const NoiseSchedule&, const LatentGrid<S>&, const LatentGrid<S>&, int);         \
  template double evaluation_loss(const WorldModel<S>&, std::span<const EncodedWindow<S>>, int, std::uint64_t);
ANWM_INSTANTIATE(float)
ANWM_INSTANTIATE(double)
#undef ANWM_INSTANTIATE

}  // namespace anwm::wm
