#include "anwm/wm/model.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "anwm/errors.hpp"
#include "anwm/wm/embedding.hpp"

namespace anwm::wm {

void ModelConfig::validate() const {
  auto fail = [](const std::string& m) { throw InvalidArgument("model config: " + m); };
  if (frame_width <= 0 || frame_height <= 0) fail("frame size must be positive");
  if (codec_factor <= 0 || frame_width % codec_factor || frame_height % codec_factor)
    fail("frame size must be divisible by codec_factor");
  if (blocks <= 0) fail("blocks must be positive");
  if (heads <= 0 || embed_dim <= 0 || embed_dim % heads) fail("embed_dim must be a positive multiple of heads");
  if (cond_dim <= 0 || cond_dim % 8) fail("cond_dim must be a positive multiple of 8");
  if (mlp_ratio <= 0) fail("mlp_ratio must be positive");
  if (context <= 0) fail("context must be positive");
  if (ffp_context < 0 || ffp_context > context) fail("ffp_context must be in [0, context]");
  if (diffusion_steps <= 0) fail("diffusion_steps must be positive");
  if (sample_steps <= 0 || sample_steps > diffusion_steps) fail("sample_steps must be in [1, diffusion_steps]");
}

ModelConfig ModelConfig::micro() {
  ModelConfig c;
  c.frame_width = c.frame_height = 8;
  c.codec_factor = 2;
  c.blocks = 2;
  c.heads = 2;
  c.embed_dim = 16;
  c.cond_dim = 16;
  return c;
}

std::string to_json(const ModelConfig& c) {
  nlohmann::json j = {{"frame_width", c.frame_width},
                      {"frame_height", c.frame_height},
                      {"codec_factor", c.codec_factor},
                      {"blocks", c.blocks},
                      {"heads", c.heads},
                      {"embed_dim", c.embed_dim},
                      {"cond_dim", c.cond_dim},
                      {"mlp_ratio", c.mlp_ratio},
                      {"context", c.context},
                      {"ffp_context", c.ffp_context},
                      {"modulation", c.modulation == Modulation::Independent ? "independent" : "uniform"},
                      {"diffusion_steps", c.diffusion_steps},
                      {"sample_steps", c.sample_steps}};
  return j.dump(2);
}

ModelConfig model_config_from_json(const std::string& text, const ModelConfig& base) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("model config: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("model config: expected a JSON object");
  ModelConfig c = base;
  try {
    for (const auto& [key, val] : j.items()) {
      if (key == "frame_width") c.frame_width = val.get<int>();
      else if (key == "frame_height") c.frame_height = val.get<int>();
      else if (key == "codec_factor") c.codec_factor = val.get<int>();
      else if (key == "blocks") c.blocks = val.get<int>();
      else if (key == "heads") c.heads = val.get<int>();
      else if (key == "embed_dim") c.embed_dim = val.get<int>();
      else if (key == "cond_dim") c.cond_dim = val.get<int>();
      else if (key == "mlp_ratio") c.mlp_ratio = val.get<int>();
      else if (key == "context") c.context = val.get<int>();
      else if (key == "ffp_context") c.ffp_context = val.get<int>();
      else if (key == "diffusion_steps") c.diffusion_steps = val.get<int>();
      else if (key == "sample_steps") c.sample_steps = val.get<int>();
      else if (key == "modulation") {
        const auto s = val.get<std::string>();
        if (s == "independent") c.modulation = Modulation::Independent;
        else if (s == "uniform") c.modulation = Modulation::Uniform;
        else throw InvalidArgument("model config: modulation must be independent or uniform");
      } else {
        throw InvalidArgument("model config: unknown key " + key);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------

template <typename Scalar>
WorldModel<Scalar>::WorldModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config), schedule_(config.diffusion_steps) {
  config_.validate();
  codec_.factor = config_.codec_factor;
  Rng rng(derive_seed(seed, "model-init"));
  const long c = config_.latent_channels(), e = config_.embed_dim, d = config_.cond_dim;

  in_proj_ = nn::Linear<Scalar>::create(params_, "in_proj", c, e, &rng);
  cond_in_ = nn::Linear<Scalar>::create(params_, "cond_in", c, e, &rng);
  pos_ = params_.add("pos_embed", nn::normal_init<Scalar>(config_.tokens(), e, 0.02, rng));
  frame_emb_ = params_.add("frame_embed", nn::normal_init<Scalar>(config_.context + 1, e, 0.02, rng));
  cond_proj_ = nn::Linear<Scalar>::create(params_, "cond_proj", d, d, &rng);
  for (int b = 0; b < config_.blocks; ++b) {
    const std::string p = "blocks." + std::to_string(b) + ".";
    Block blk;
    blk.adaln = nn::Linear<Scalar>::create(params_, p + "adaln", d, 14 * e, nullptr);
    blk.self_attn = nn::Attention<Scalar>::create(params_, p + "self_attn", e, config_.heads, rng);
    blk.cross = nn::Attention<Scalar>::create(params_, p + "cross_attn", e, config_.heads, rng);
    blk.mlp = nn::Mlp<Scalar>::create(params_, p + "mlp", e, config_.mlp_ratio * e, rng);
    blocks_.push_back(blk);
  }
  out_proj_ = nn::Linear<Scalar>::create(params_, "out_proj", e, c, nullptr);
}

template <typename Scalar>
ModulationCoeffs<Scalar> WorldModel<Scalar>::split_coeffs(const RowVec& raw) const {
  const int e = config_.embed_dim;
  auto c = ModulationCoeffs<Scalar>::zeros(e);
  for (int i = 0; i < 4; ++i) c.alpha.row(i) = raw.segment(i * e, e);
  for (int i = 0; i < 5; ++i) c.beta.row(i) = raw.segment((4 + i) * e, e);
  for (int i = 0; i < 5; ++i) c.gamma.row(i) = raw.segment((9 + i) * e, e);
  return c;
}

template <typename Scalar>
typename WorldModel<Scalar>::RowVec WorldModel<Scalar>::join_coeffs(const ModulationCoeffs<Scalar>& c) const {
  const int e = config_.embed_dim;
  RowVec raw(14 * e);
  for (int i = 0; i < 4; ++i) raw.segment(i * e, e) = c.alpha.row(i);
  for (int i = 0; i < 5; ++i) raw.segment((4 + i) * e, e) = c.beta.row(i);
  for (int i = 0; i < 5; ++i) raw.segment((9 + i) * e, e) = c.gamma.row(i);
  return raw;
}

template <typename Scalar>
typename WorldModel<Scalar>::RowVec WorldModel<Scalar>::condition(const Action4& a, int step) const {
  const RowVec raw = embed_action(a, step, config_.cond_dim).template cast<Scalar>().transpose();
  return cond_proj_.forward(params_, raw);
}

template <typename Scalar>
ModulationCoeffs<Scalar> WorldModel<Scalar>::adaln_coeffs(int block, const RowVec& nu) const {
  if (block < 0 || block >= config_.blocks) throw InvalidArgument("adaln_coeffs: block index out of range");
  if (nu.size() != config_.cond_dim) throw InvalidArgument("adaln_coeffs: embedding width mismatch");
  const Mat act = nn::silu<Scalar>(nu);
  const Mat raw = blocks_[block].adaln.forward(params_, act);
  return split_coeffs(raw.row(0));
}

template <typename Scalar>
typename WorldModel<Scalar>::Mat WorldModel<Scalar>::block_forward(const Block& b, const Mat& x,
                                                                   const Mat& past_hat, const Mat& proj_hat,
                                                                   const ModulationCoeffs<Scalar>& c,
                                                                   BlockCache& k) const {
  const int pr = config_.modulation == Modulation::Uniform ? 1 : 2;
  const Mat a1 = nn::layer_norm(x, k.ln1);
  k.m1 = nn::modulate<Scalar>(a1, c.beta.row(0), c.gamma.row(0));
  k.s = b.self_attn.forward(params_, k.m1, k.m1, k.sa);
  k.z1 = x + (k.s.array().rowwise() * c.alpha.row(0).array()).matrix();

  k.mp = nn::modulate<Scalar>(past_hat, c.beta.row(1), c.gamma.row(1));
  k.c2 = b.cross.forward(params_, k.z1, k.mp, k.ca2);
  k.z2 = k.z1 + (k.c2.array().rowwise() * c.alpha.row(1).array()).matrix();

  k.mj = nn::modulate<Scalar>(proj_hat, c.beta.row(pr), c.gamma.row(pr));
  k.c3 = b.cross.forward(params_, k.z2, k.mj, k.ca3);
  k.z3 = k.z2 + (k.c3.array().rowwise() * c.alpha.row(2).array()).matrix();

  const Mat a4 = nn::layer_norm(k.z3, k.ln4);
  k.m4 = nn::modulate<Scalar>(a4, c.beta.row(3), c.gamma.row(3));
  k.f = b.mlp.forward(params_, k.m4, k.mlp);
  return k.z3 + (k.f.array().rowwise() * c.alpha.row(3).array()).matrix();
}

template <typename Scalar>
typename WorldModel<Scalar>::Mat WorldModel<Scalar>::block_backward(
    const Block& b, const ModulationCoeffs<Scalar>& c, const BlockCache& k, const Mat& dout, const Mat& past_hat,
    const Mat& proj_hat, Mat& dpast_hat, Mat& dproj_hat, ModulationCoeffs<Scalar>& dc,
    nn::Gradients<Scalar>& g) const {
  const int pr = config_.modulation == Modulation::Uniform ? 1 : 2;

  // out = z3 + a4 * f
  dc.alpha.row(3) += (dout.array() * k.f.array()).colwise().sum().matrix();
  const Mat df = dout.array().rowwise() * c.alpha.row(3).array();
  const Mat dm4 = b.mlp.backward(params_, k.mlp, df, g);
  const Mat da4 = nn::modulate_backward<Scalar>(k.ln4.xhat, c.beta.row(3), dm4, dc.beta.row(3), dc.gamma.row(3));
  Mat dz3 = dout + nn::layer_norm_backward(k.ln4, da4);

  // z3 = z2 + a3 * MHCA(z2, proj)
  dc.alpha.row(2) += (dz3.array() * k.c3.array()).colwise().sum().matrix();
  const Mat dc3 = dz3.array().rowwise() * c.alpha.row(2).array();
  auto [dq3, dkv3] = b.cross.backward(params_, k.ca3, dc3, g);
  Mat dz2 = dz3 + dq3;
  dproj_hat += nn::modulate_backward<Scalar>(proj_hat, c.beta.row(pr), dkv3, dc.beta.row(pr), dc.gamma.row(pr));

  // z2 = z1 + a2 * MHCA(z1, past)
  dc.alpha.row(1) += (dz2.array() * k.c2.array()).colwise().sum().matrix();
  const Mat dc2 = dz2.array().rowwise() * c.alpha.row(1).array();
  auto [dq2, dkv2] = b.cross.backward(params_, k.ca2, dc2, g);
  Mat dz1 = dz2 + dq2;
  dpast_hat += nn::modulate_backward<Scalar>(past_hat, c.beta.row(1), dkv2, dc.beta.row(1), dc.gamma.row(1));

  // z1 = x + a1 * MHSA(m1)
  dc.alpha.row(0) += (dz1.array() * k.s.array()).colwise().sum().matrix();
  const Mat ds = dz1.array().rowwise() * c.alpha.row(0).array();
  auto [dq1, dkv1] = b.self_attn.backward(params_, k.sa, ds, g);
  const Mat dm1 = dq1 + dkv1;
  const Mat da1 = nn::modulate_backward<Scalar>(k.ln1.xhat, c.beta.row(0), dm1, dc.beta.row(0), dc.gamma.row(0));
  return dz1 + nn::layer_norm_backward(k.ln1, da1);
}

template <typename Scalar>
typename WorldModel<Scalar>::Mat WorldModel<Scalar>::cdit_block(int block, const Mat& x, const Mat& past,
                                                                const Mat& proj,
                                                                const ModulationCoeffs<Scalar>& coeffs) const {
  if (block < 0 || block >= config_.blocks) throw InvalidArgument("cdit_block: block index out of range");
  const long e = config_.embed_dim;
  if (x.cols() != e || past.cols() != e || proj.cols() != e)
    throw InvalidArgument("cdit_block: token width must equal embed_dim");
  if (coeffs.alpha.rows() != 4 || coeffs.beta.rows() != 5 || coeffs.gamma.rows() != 5 || coeffs.alpha.cols() != e ||
      coeffs.beta.cols() != e || coeffs.gamma.cols() != e)
    throw InvalidArgument("cdit_block: coefficient shapes must be (4, d_e), (5, d_e), (5, d_e)");
  nn::LayerNormCache<Scalar> lp, lj;
  const Mat past_hat = nn::layer_norm(past, lp);
  const Mat proj_hat = nn::layer_norm(proj, lj);
  BlockCache cache;
  return block_forward(blocks_[block], x, past_hat, proj_hat, coeffs, cache);
}

template <typename Scalar>
Conditioning<Scalar> WorldModel<Scalar>::encode_condition(std::span<const FrameRGBD> past,
                                                          const FrameRGBD& prior) const {
  if (static_cast<int>(past.size()) != config_.context)
    throw InvalidArgument("encode_condition: expected " + std::to_string(config_.context) + " past frames, got " +
                          std::to_string(past.size()));
  Conditioning<Scalar> c;
  for (const auto& f : past) c.past.push_back(codec_.encode(f).template cast<Scalar>());
  c.projected = codec_.encode(prior).template cast<Scalar>();
  return c;
}

template <typename Scalar>
void WorldModel<Scalar>::check_conditioning(const Latent& x, const Conditioning<Scalar>& cond) const {
  const int c = config_.latent_channels(), h = config_.latent_height(), w = config_.latent_width();
  auto ok = [&](const Latent& l) { return l.channels == c && l.height == h && l.width == w; };
  if (!ok(x)) throw InvalidArgument("denoise: noisy latent has the wrong shape");
  if (static_cast<int>(cond.past.size()) != config_.context)
    throw InvalidArgument("denoise: expected " + std::to_string(config_.context) + " past latents, got " +
                          std::to_string(cond.past.size()));
  for (const auto& l : cond.past)
    if (!ok(l)) throw InvalidArgument("denoise: past latent has the wrong shape");
  if (!ok(cond.projected)) throw InvalidArgument("denoise: projected latent has the wrong shape");
}

template <typename Scalar>
typename WorldModel<Scalar>::Mat WorldModel<Scalar>::forward(const Latent& x_step, const Conditioning<Scalar>& cond,
                                                             const Action4& a, int step, ForwardCache& k) const {
  check_conditioning(x_step, cond);
  const int n = config_.tokens(), e = config_.embed_dim, m = config_.context;
  const Mat& pos = params_[pos_];
  const Mat& fe = params_[frame_emb_];

  k.x_in = x_step.tokens;
  Mat x = in_proj_.forward(params_, k.x_in) + pos;

  k.past_in.resize(static_cast<std::size_t>(m));
  Mat past(static_cast<long>(m) * n, e);
  for (int i = 0; i < m; ++i) {
    k.past_in[i] = cond.past[i].tokens;
    Mat t = cond_in_.forward(params_, k.past_in[i]) + pos;
    t.rowwise() += fe.row(i);
    past.middleRows(static_cast<long>(i) * n, n) = t;
  }
  k.proj_in = cond.projected.tokens;
  Mat proj = cond_in_.forward(params_, k.proj_in) + pos;
  proj.rowwise() += fe.row(m);
  k.past_hat = nn::layer_norm(past, k.ln_past);
  k.proj_hat = nn::layer_norm(proj, k.ln_proj);

  k.nu_raw = embed_action(a, step, config_.cond_dim);
  k.nu = cond_proj_.forward(params_, k.nu_raw.template cast<Scalar>().transpose());
  k.nu_act = nn::silu<Scalar>(k.nu);

  k.xs.assign(1, x);
  k.coeffs.clear();
  k.blocks.resize(blocks_.size());
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    k.coeffs.push_back(split_coeffs(blocks_[b].adaln.forward(params_, k.nu_act).row(0)));
    x = block_forward(blocks_[b], x, k.past_hat, k.proj_hat, k.coeffs.back(), k.blocks[b]);
    k.xs.push_back(x);
  }
  const auto& last = k.coeffs.back();
  const Mat h = nn::layer_norm(x, k.ln_out);
  k.head_in = nn::modulate<Scalar>(h, last.beta.row(4), last.gamma.row(4));
  return out_proj_.forward(params_, k.head_in);
}

template <typename Scalar>
void WorldModel<Scalar>::backward(const ForwardCache& k, const Mat& dout, nn::Gradients<Scalar>& g) const {
  const int n = config_.tokens(), e = config_.embed_dim, m = config_.context;
  const std::size_t nb = blocks_.size();
  std::vector<ModulationCoeffs<Scalar>> dc(nb, ModulationCoeffs<Scalar>::zeros(e));

  const Mat dhead = out_proj_.backward(params_, k.head_in, dout, g);
  const auto& last = k.coeffs.back();
  const Mat dh = nn::modulate_backward<Scalar>(k.ln_out.xhat, last.beta.row(4), dhead, dc.back().beta.row(4),
                                               dc.back().gamma.row(4));
  Mat dx = nn::layer_norm_backward(k.ln_out, dh);

  Mat dpast_hat = Mat::Zero(k.past_hat.rows(), e);
  Mat dproj_hat = Mat::Zero(k.proj_hat.rows(), e);
  Mat dnu_act = Mat::Zero(1, config_.cond_dim);
  for (std::size_t b = nb; b-- > 0;) {
    dx = block_backward(blocks_[b], k.coeffs[b], k.blocks[b], dx, k.past_hat, k.proj_hat, dpast_hat, dproj_hat,
                        dc[b], g);
    dnu_act += blocks_[b].adaln.backward(params_, k.nu_act, join_coeffs(dc[b]), g);
  }
  const Mat dnu = nn::silu_backward<Scalar>(k.nu, dnu_act);
  cond_proj_.backward_params(k.nu_raw.template cast<Scalar>().transpose(), dnu, g);

  const Mat dpast = nn::layer_norm_backward(k.ln_past, dpast_hat);
  const Mat dproj = nn::layer_norm_backward(k.ln_proj, dproj_hat);
  for (int i = 0; i < m; ++i) {
    const auto blk = dpast.middleRows(static_cast<long>(i) * n, n);
    g[pos_] += blk;
    g[frame_emb_].row(i) += blk.colwise().sum();
    cond_in_.backward_params(k.past_in[i], blk, g);
  }
  g[pos_] += dproj;
  g[frame_emb_].row(m) += dproj.colwise().sum();
  cond_in_.backward_params(k.proj_in, dproj, g);

  g[pos_] += dx;
  in_proj_.backward_params(k.x_in, dx, g);
}

template <typename Scalar>
typename WorldModel<Scalar>::Latent WorldModel<Scalar>::denoise(const Latent& x_step, const Conditioning<Scalar>& cond,
                                                                const Action4& a, int step) const {
  ForwardCache cache;
  Mat out = forward(x_step, cond, a, step, cache);
  return Latent(x_step.channels, x_step.height, x_step.width, std::move(out));
}

template <typename Scalar>
Scalar WorldModel<Scalar>::loss(const Latent& x_step, const Conditioning<Scalar>& cond, const Action4& a, int step,
                                const Latent& noise, nn::Gradients<Scalar>* grads) const {
  if (!noise.same_shape(x_step)) throw InvalidArgument("loss: noise shape differs from latent");
  ForwardCache cache;
  const Mat out = forward(x_step, cond, a, step, cache);
  const Mat diff = out - noise.tokens;
  const auto size = static_cast<Scalar>(diff.size());
  const Scalar value = diff.squaredNorm() / size;
  if (grads) backward(cache, diff * (Scalar(2) / size), *grads);
  return value;
}

template <typename Scalar>
LatentGrid<double> WorldModel<Scalar>::sample(const Conditioning<Scalar>& cond, const Action4& a, Rng& rng,
                                              bool stochastic) const {
  const int c = config_.latent_channels(), h = config_.latent_height(), w = config_.latent_width();
  const double lo = codec_.latent_min(), hi = codec_.latent_max();
  LatentGrid<double> x(c, h, w);
  for (long j = 0; j < x.tokens.cols(); ++j)
    for (long i = 0; i < x.tokens.rows(); ++i) x.tokens(i, j) = rng.normal();

  const auto steps = schedule_.sampling_steps(config_.sample_steps);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const int t = steps[i];
    const int t_prev = i + 1 < steps.size() ? steps[i + 1] : 0;
    const double s_t = schedule_.signal(t), n_t = schedule_.noise(t);
    const LatentGrid<double> eps = denoise(x.template cast<Scalar>(), cond, a, t).template cast<double>();
    Eigen::MatrixXd x0 = ((x.tokens - n_t * eps.tokens) / s_t).cwiseMax(lo).cwiseMin(hi);
    if (t_prev == 0) {
      x.tokens = x0;
      break;
    }
    // noise direction consistent with the clamped estimate
    const Eigen::MatrixXd e = (x.tokens - s_t * x0) / n_t;
    const double s_p = schedule_.signal(t_prev), n_p = schedule_.noise(t_prev);
    if (!stochastic) {
      x.tokens = s_p * x0 + n_p * e;
    } else {
      const double abar_t = s_t * s_t, abar_p = s_p * s_p;
      const double sigma = std::sqrt((1 - abar_p) / (1 - abar_t)) * std::sqrt(1 - abar_t / abar_p);
      const double dir = std::sqrt(std::max(0.0, n_p * n_p - sigma * sigma));
      Eigen::MatrixXd z(x.tokens.rows(), x.tokens.cols());
      for (long jj = 0; jj < z.cols(); ++jj)
        for (long ii = 0; ii < z.rows(); ++ii) z(ii, jj) = rng.normal();
      x.tokens = s_p * x0 + dir * e + sigma * z;
    }
  }
  return x;
}

template class WorldModel<float>;
template class WorldModel<double>;

}  // namespace anwm::wm
