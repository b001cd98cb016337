#include <doctest.h>

#include <cmath>
#include <fstream>

#include "anwm/errors.hpp"
#include "anwm/wm/checkpoint.hpp"
#include "anwm/wm/embedding.hpp"
#include "anwm/wm/model.hpp"
#include "anwm/wm/trainer.hpp"
#include "grad_check.hpp"
#include "support.hpp"

using namespace anwm;
using namespace anwm::wm;

namespace {

template <typename S>
Conditioning<S> random_condition(const ModelConfig& c, Rng& rng) {
  Conditioning<S> cond;
  for (int i = 0; i < c.context; ++i)
    cond.past.push_back(gaussian_latent<S>(c.latent_channels(), c.latent_height(), c.latent_width(), rng));
  cond.projected = gaussian_latent<S>(c.latent_channels(), c.latent_height(), c.latent_width(), rng);
  return cond;
}

template <typename S>
ModulationCoeffs<S> random_coeffs(int width, Rng& rng) {
  auto c = ModulationCoeffs<S>::zeros(width);
  c.alpha = nn::normal_init<S>(4, width, 0.5, rng);
  c.beta = nn::normal_init<S>(5, width, 0.5, rng);
  c.gamma = nn::normal_init<S>(5, width, 0.5, rng);
  return c;
}

void perturb(WorldModel<double>& m, double scale, Rng& rng) {
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    auto& p = m.params()[i];
    p += nn::normal_init<double>(p.rows(), p.cols(), scale, rng);
  }
}

// Independent evaluation of the documented feature layout.
double feature_oracle(const Action4& a, int dim, int index) {
  const int per = dim / 4, c = index / per, k = (index % per) / 2;
  const double comp = a.vec()[c];
  const double arg = 2 * kPi * comp / (2.0 * std::pow(2.0, k));
  return (index % 2 == 0) ? std::sin(arg) : std::cos(arg);
}

}  // namespace

TEST_CASE("codec shapes, exactness and affine constants") {
  LatentCodec codec;
  FrameRGBD f = FrameRGBD::blank(64, 64);
  const auto l = codec.encode(f);
  CHECK(l.channels == 48);
  CHECK(l.height == 16);
  CHECK(l.width == 16);
  CHECK((l.tokens.array() == -2.0).all());
  CHECK(codec.latent_min() == -2.0);
  CHECK(codec.latent_max() == 2.0);

  Rng rng(1);
  for (int i = 0; i < 5; ++i) {
    const FrameRGBD r = testing::random_frame(64, 64, rng);
    const FrameRGBD back = codec.decode(codec.encode(r));
    for (int c = 0; c < 3; ++c) CHECK((back.rgb[c] == r.rgb[c]).all());
  }
  // arbitrary float colours round trip as well
  FrameRGBD g = FrameRGBD::blank(8, 8);
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 64; ++k) g.rgb[c](k) = static_cast<float>(rng.uniform());
  LatentCodec c2;
  c2.factor = 2;
  const FrameRGBD gb = c2.decode(c2.encode(g));
  for (int c = 0; c < 3; ++c) CHECK((gb.rgb[c] == g.rgb[c]).all());

  // channel layout
  const FrameRGBD r = testing::random_frame(8, 8, rng);
  const auto lr = c2.encode(r);
  for (int ch = 0; ch < 3; ++ch)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx)
        CHECK(lr.at((ch * 2 + dy) * 2 + dx, 1, 2) == (static_cast<double>(r.rgb[ch](2 + dy, 4 + dx)) - 0.5) * 4.0);

  CHECK_THROWS_AS(codec.encode(FrameRGBD::blank(62, 64)), InvalidArgument);
}

TEST_CASE("noise schedule is variance preserving and monotone") {
  NoiseSchedule s(250);
  for (int t = 0; t <= 250; ++t) {
    CHECK(std::abs(s.signal(t) * s.signal(t) + s.noise(t) * s.noise(t) - 1.0) < 1e-12);
    if (t > 0) {
      CHECK(s.signal(t) < s.signal(t - 1));
      CHECK(s.noise(t) > s.noise(t - 1));
    }
  }
  const auto steps = s.sampling_steps(25);
  REQUIRE(steps.size() == 25);
  CHECK(steps.front() == 250);
  CHECK(steps.back() == 10);
  for (std::size_t i = 1; i < steps.size(); ++i) CHECK(steps[i] < steps[i - 1]);
}

TEST_CASE("action embedding") {
  const int d = 128;
  const auto zero = action_features({}, d);
  for (int i = 0; i < d; ++i) CHECK(zero[i] == (i % 2 == 0 ? 0.0 : 1.0));
  const Action4 a{5, 0, 0, 0}, b{0, 5, 0, 0};
  const auto fa = action_features(a, d);
  for (int i = 0; i < d; ++i) CHECK(fa[i] == doctest::Approx(feature_oracle(a, d, i)).epsilon(1e-12));
  const auto ea = embed_action(a, 17, d), eb = embed_action(b, 17, d);
  int differ = 0;
  for (int i = 0; i < d; ++i) differ += std::abs(ea[i] - eb[i]) > 1e-9;
  CHECK(differ >= d / 4);
  CHECK(embed_action(a, 17, d) == embed_action(a, 17, d));
  CHECK((embed_action(a, 17, d) - action_features(a, d) - timestep_features(17, d)).norm() < 1e-14);
  CHECK_THROWS_AS(action_features(a, 12), InvalidArgument);
}

TEST_CASE("zero-initialized AdaLN heads give zero coefficients and identity blocks") {
  const auto cfg = ModelConfig::micro();
  WorldModel<double> m(cfg, 1);
  Rng rng(2);
  const auto nu = m.condition({5, 0, 1, 0.1}, 40);
  for (int b = 0; b < cfg.blocks; ++b) {
    const auto c = m.adaln_coeffs(b, nu);
    CHECK(c.alpha.rows() == 4);
    CHECK(c.beta.rows() == 5);
    CHECK(c.gamma.rows() == 5);
    CHECK(c.alpha.cols() == cfg.embed_dim);
    CHECK(c.alpha.isZero(0));
    CHECK(c.beta.isZero(0));
    CHECK(c.gamma.isZero(0));
  }
  const nn::Mat<double> x = nn::normal_init<double>(16, 16, 1.0, rng);
  const nn::Mat<double> past = nn::normal_init<double>(64, 16, 1.0, rng);
  const nn::Mat<double> proj = nn::normal_init<double>(16, 16, 1.0, rng);
  const auto zero = ModulationCoeffs<double>::zeros(16);
  for (int b = 0; b < cfg.blocks; ++b) CHECK(m.cdit_block(b, x, past, proj, zero) == x);
}

TEST_CASE("past and projected memories use distinct modulation") {
  auto cfg = ModelConfig::micro();
  WorldModel<double> m(cfg, 3);
  Rng rng(4);
  const nn::Mat<double> x = nn::normal_init<double>(16, 16, 1.0, rng);
  const nn::Mat<double> a = nn::normal_init<double>(16, 16, 1.0, rng);
  const nn::Mat<double> b = nn::normal_init<double>(16, 16, 1.0, rng);
  const auto c = random_coeffs<double>(16, rng);
  const auto ab = m.cdit_block(0, x, a, b, c), ba = m.cdit_block(0, x, b, a, c);
  CHECK((ab - ba).norm() > 1e-6);

  // Uniform modulation ignores the third pair entirely.
  cfg.modulation = Modulation::Uniform;
  WorldModel<double> u(cfg, 3);
  auto c3 = c;
  c3.beta.row(2).setConstant(3.0);
  c3.gamma.row(2).setConstant(-1.0);
  CHECK((u.cdit_block(0, x, a, b, c) - u.cdit_block(0, x, a, b, c3)).norm() == 0.0);
  CHECK((m.cdit_block(0, x, a, b, c) - m.cdit_block(0, x, a, b, c3)).norm() > 1e-6);
}

TEST_CASE("both cross-attentions share one parameter set") {
  const auto cfg = ModelConfig::micro();
  WorldModel<double> m(cfg, 5);
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string prefix = "blocks." + std::to_string(b) + ".";
    int cross = 0;
    for (std::size_t i = 0; i < m.params().size(); ++i)
      cross += m.params().name(i).rfind(prefix + "cross_attn", 0) == 0;
    CHECK(cross == 8);  // q, k, v, out weight and bias: one set
    CHECK(m.params().name(m.cross_attention_query_weight(b)) == prefix + "cross_attn.q.weight");
  }
}

TEST_CASE("denoise shape, determinism and argument checks") {
  const auto cfg = ModelConfig::micro();
  WorldModel<double> m(cfg, 6);
  Rng rng(7);
  perturb(m, 0.05, rng);
  const auto cond = random_condition<double>(cfg, rng);
  const auto x = gaussian_latent<double>(12, 4, 4, rng);
  const auto e1 = m.denoise(x, cond, {5, 0, 0, 0}, 100);
  const auto e2 = m.denoise(x, cond, {5, 0, 0, 0}, 100);
  CHECK(e1.same_shape(x));
  CHECK(e1.tokens == e2.tokens);
  auto short_cond = cond;
  short_cond.past.pop_back();
  CHECK_THROWS_AS(m.denoise(x, short_cond, {}, 100), InvalidArgument);
  CHECK_THROWS_AS(m.cdit_block(0, nn::Mat<double>::Zero(16, 15), nn::Mat<double>::Zero(4, 16),
                               nn::Mat<double>::Zero(4, 16), ModulationCoeffs<double>::zeros(16)),
                  InvalidArgument);
}

TEST_CASE("loss at initialization equals the noise energy") {
  const auto cfg = ModelConfig::micro();
  WorldModel<double> m(cfg, 8);
  Rng rng(9);
  double total = 0;
  const int n = 200;
  for (int i = 0; i < n; ++i) {
    const auto cond = random_condition<double>(cfg, rng);
    const auto x0 = gaussian_latent<double>(12, 4, 4, rng);
    const auto eps = gaussian_latent<double>(12, 4, 4, rng);
    const int t = static_cast<int>(rng.uniform_int(1, 250));
    const double l = m.loss(add_noise(m.schedule(), x0, eps, t), cond, {}, t, eps, nullptr);
    CHECK(l == doctest::Approx(eps.tokens.squaredNorm() / 192.0).epsilon(1e-12));
    total += l;
  }
  CHECK(total / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("analytic gradients match central differences") {
  const auto cfg = ModelConfig::micro();
  WorldModel<double> m(cfg, 10);
  Rng rng(11);
  perturb(m, 0.1, rng);
  const auto cond = random_condition<double>(cfg, rng);
  const auto x0 = gaussian_latent<double>(12, 4, 4, rng);
  const auto eps = gaussian_latent<double>(12, 4, 4, rng);
  const auto errs = testing::gradient_errors(m, add_noise(m.schedule(), x0, eps, 90), cond, {3, -2, 1, 0.2}, 90, eps);
  for (const auto& e : errs) {
    INFO(e.name);
    if (e.relative) CHECK(e.error < 1e-4);
    else CHECK(e.error < 1e-8);
  }
}

TEST_CASE("train_step: zero learning rate keeps parameters, training moves them") {
  const auto cfg = ModelConfig::micro();
  const Clip clip = testing::make_clip(31, 12, 8);
  WorldModel<float> m(cfg, 12);
  const auto wins = make_windows(clip, cfg, 4, 11);
  CHECK(wins.size() == 8);
  const auto enc = encode_windows(m, std::span<const TrainingWindow>(wins));
  TrainConfig tc;
  tc.learning_rate = 0;
  Trainer<float> frozen(m, tc);
  const auto before = m.params()[0];
  Rng rng(1);
  const double loss = frozen.train_step(std::span(enc).first(4), rng);
  CHECK(std::isfinite(loss));
  CHECK(m.params()[0] == before);

  tc.learning_rate = 1e-2;
  Trainer<float> tr(m, tc);
  for (int i = 0; i < 60; ++i) tr.train_step(std::span(enc).first(4), rng);
  CHECK_FALSE(m.params()[0] == before);
  // the conditioning path is live after training
  const auto& w = enc[0];
  Rng nr(3);
  const auto x = gaussian_latent<float>(12, 4, 4, nr);
  const auto fwd = m.denoise(x, w.cond, {5, 0, 0, 0}, 120), back = m.denoise(x, w.cond, {-5, 0, 0, 0}, 120);
  CHECK((fwd.tokens - back.tokens).norm() > 0);
}

TEST_CASE("non-finite parameters raise TrainingDiverged with a dump") {
  const auto cfg = ModelConfig::micro();
  const Clip clip = testing::make_clip(32, 6, 8);
  WorldModel<float> m(cfg, 13);
  const auto wins = make_windows(clip, cfg);
  const auto enc = encode_windows(m, std::span<const TrainingWindow>(wins));
  m.params()[*m.params().find("out_proj.bias")](0, 0) = std::nanf("");
  Trainer<float> tr(m, TrainConfig{});
  Rng rng(1);
  try {
    tr.train_step(enc, rng);
    FAIL("expected TrainingDiverged");
  } catch (const TrainingDiverged& e) {
    CHECK(std::string(e.what()).find("out_proj.bias") != std::string::npos);
  }
}

TEST_CASE("config JSON round trips and rejects bad input") {
  ModelConfig c = ModelConfig::micro();
  c.modulation = Modulation::Uniform;
  CHECK(model_config_from_json(to_json(c)) == c);
  CHECK_THROWS_AS(model_config_from_json("{\"blocks\": 0}"), InvalidArgument);
  CHECK_THROWS_AS(model_config_from_json("{\"mystery\": 1}"), InvalidArgument);
  CHECK_THROWS_AS(model_config_from_json("{\"embed_dim\": 10, \"heads\": 4}"), InvalidArgument);
  TrainConfig t;
  t.learning_rate = 3e-4;
  CHECK(train_config_from_json(to_json(t)) == t);
  CHECK(TrainConfig{}.learning_rate == 8e-5);
  CHECK_THROWS_AS(train_config_from_json("{\"lr_schedule\": \"step\"}"), InvalidArgument);
}

TEST_CASE("learning-rate schedules") {
  TrainConfig t;
  t.learning_rate = 0.1;
  t.steps = 100;
  CHECK(t.learning_rate_at(0) == 0.1);
  CHECK(t.learning_rate_at(99) == 0.1);
  t.lr_schedule = "cosine";
  CHECK(t.learning_rate_at(0) == doctest::Approx(0.1));
  CHECK(t.learning_rate_at(50) == doctest::Approx(0.05));
  CHECK(t.learning_rate_at(25) == doctest::Approx(0.05 * (1 + std::sqrt(0.5))));
  CHECK(t.learning_rate_at(100) == doctest::Approx(0.0));
  CHECK(t.learning_rate_at(500) == doctest::Approx(0.0));
  CHECK(train_config_from_json(to_json(t)) == t);
}

TEST_CASE("checkpoint round trip and corruption handling") {
  const auto cfg = ModelConfig::micro();
  WorldModel<float> m(cfg, 14);
  Rng rng(5);
  for (std::size_t i = 0; i < m.params().size(); ++i)
    m.params()[i] += nn::normal_init<float>(m.params()[i].rows(), m.params()[i].cols(), 0.1, rng);
  const auto dir = testing::temp_dir("ckpt");
  TrainConfig tc;
  tc.steps = 7;
  save_checkpoint(dir / "m.ckpt", m, tc, 7);
  const auto ck = load_checkpoint(dir / "m.ckpt");
  CHECK(ck.model->config() == cfg);
  CHECK(ck.train == tc);
  CHECK(ck.steps_done == 7);
  for (std::size_t i = 0; i < m.params().size(); ++i) CHECK(ck.model->params()[i] == m.params()[i]);

  std::ifstream in(dir / "m.ckpt", std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  auto write = [&](const std::string& b) {
    std::ofstream out(dir / "bad.ckpt", std::ios::binary | std::ios::trunc);
    out << b;
  };
  write(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), FormatError);
  auto v = bytes;
  v[8] = 2;
  write(v);
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), VersionError);
  auto mg = bytes;
  mg[0] = 'X';
  write(mg);
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), FormatError);
}
