#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "anwm/frame.hpp"
#include "anwm/geometry.hpp"
#include "anwm/rng.hpp"
#include "anwm/wm/codec.hpp"
#include "anwm/wm/latent.hpp"
#include "anwm/wm/nn.hpp"
#include "anwm/wm/schedule.hpp"

namespace anwm::wm {

/// How condition latents are normalized before cross-attention.
///  Independent: past frames use (beta2, gamma2), the projected frame (beta3, gamma3).
///  Uniform:     both use (beta2, gamma2).
enum class Modulation { Independent, Uniform };

struct ModelConfig {
  int frame_width = 64;
  int frame_height = 64;
  int codec_factor = 4;
  int blocks = 4;
  int heads = 4;
  int embed_dim = 128;  // token / coefficient width d_e
  int cond_dim = 128;   // action embedding width d, multiple of 8
  int mlp_ratio = 4;
  int context = 4;      // m past frames
  int ffp_context = 0;  // frames warped into the prior, 0 = all m
  Modulation modulation = Modulation::Independent;
  int diffusion_steps = 250;
  int sample_steps = 25;

  int latent_channels() const { return 3 * codec_factor * codec_factor; }
  int latent_height() const { return frame_height / codec_factor; }
  int latent_width() const { return frame_width / codec_factor; }
  int tokens() const { return latent_height() * latent_width(); }
  void validate() const;

  /// 2 blocks, d_e = 16, 8x8 frames, factor-2 codec.
  static ModelConfig micro();

  bool operator==(const ModelConfig&) const = default;
};

std::string to_json(const ModelConfig& c);
/// Unknown keys are rejected; missing keys keep `base` values.
ModelConfig model_config_from_json(const std::string& text, const ModelConfig& base = {});

/// Per-block AdaLN output: alpha rows 0..3 gate the four residual branches,
/// beta/gamma rows 0..3 modulate the four normalized inputs and row 4 is used
/// by the output head (last block only).
template <typename Scalar>
struct ModulationCoeffs {
  nn::Mat<Scalar> alpha, beta, gamma;

  static ModulationCoeffs zeros(int width) {
    return {nn::Mat<Scalar>::Zero(4, width), nn::Mat<Scalar>::Zero(5, width), nn::Mat<Scalar>::Zero(5, width)};
  }
};

/// Encoded conditioning for one prediction: m past-frame latents (oldest
/// first) and the latent of the projected future frame.
template <typename Scalar>
struct Conditioning {
  std::vector<LatentGrid<Scalar>> past;
  LatentGrid<Scalar> projected;
};

template <typename Scalar>
class WorldModel {
 public:
  using Mat = nn::Mat<Scalar>;
  using RowVec = nn::RowVec<Scalar>;
  using Latent = LatentGrid<Scalar>;

  WorldModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const LatentCodec& codec() const { return codec_; }
  const NoiseSchedule& schedule() const { return schedule_; }
  nn::ParameterSet<Scalar>& params() { return params_; }
  const nn::ParameterSet<Scalar>& params() const { return params_; }

  /// Learned projection of embed_action(a, step): the vector fed to every
  /// AdaLN head.
  RowVec condition(const Action4& a, int step) const;

  /// alpha, beta, gamma = AdaLN(SiLU(nu)) for one block.
  ModulationCoeffs<Scalar> adaln_coeffs(int block, const RowVec& nu) const;

  /// One CDiT block on tokens of width d_e:
  ///   z1  = x  + a1 * MHSA((1 + b1) LN(x) + g1)
  ///   z2  = z1 + a2 * MHCA(q = z1, kv = (1 + b2) LN(past) + g2)
  ///   z3  = z2 + a3 * MHCA(q = z2, kv = (1 + b3) LN(proj) + g3)
  ///   out = z3 + a4 * MLP((1 + b4) LN(z3) + g4)
  /// The two cross-attentions share one weight set.
  Mat cdit_block(int block, const Mat& x, const Mat& past, const Mat& proj,
                 const ModulationCoeffs<Scalar>& coeffs) const;

  /// Index of the shared cross-attention query weight of a block (exposed
  /// for parameter-identity checks).
  std::size_t cross_attention_query_weight(int block) const { return blocks_[block].cross.wq.weight; }

  Conditioning<Scalar> encode_condition(std::span<const FrameRGBD> past, const FrameRGBD& prior) const;

  /// Predicted noise for x_step.
  Latent denoise(const Latent& x_step, const Conditioning<Scalar>& cond, const Action4& a, int step) const;

  /// Mean squared error between predicted and true noise; accumulates the
  /// parameter gradient into `grads` when non-null.
  Scalar loss(const Latent& x_step, const Conditioning<Scalar>& cond, const Action4& a, int step,
              const Latent& noise, nn::Gradients<Scalar>* grads) const;

  /// DDIM sampling from pure noise over config().sample_steps steps. The
  /// clean-latent estimate is clamped to the codec range at every step.
  /// With `stochastic` the ancestral (eta = 1) update is used.
  LatentGrid<double> sample(const Conditioning<Scalar>& cond, const Action4& a, Rng& rng,
                            bool stochastic = false) const;

 private:
  struct Block {
    nn::Linear<Scalar> adaln;
    nn::Attention<Scalar> self_attn;
    nn::Attention<Scalar> cross;
    nn::Mlp<Scalar> mlp;
  };

  struct BlockCache {
    nn::LayerNormCache<Scalar> ln1, ln4;
    nn::AttentionCache<Scalar> sa, ca2, ca3;
    nn::MlpCache<Scalar> mlp;
    Mat m1, s, z1, mp, c2, z2, mj, c3, z3, m4, f;
  };

  struct ForwardCache {
    Mat x_in, proj_in;
    std::vector<Mat> past_in;
    Eigen::VectorXd nu_raw;
    RowVec nu, nu_act;
    nn::LayerNormCache<Scalar> ln_past, ln_proj, ln_out;
    Mat past_hat, proj_hat;
    std::vector<Mat> xs;  // block inputs, xs[N] = final tokens
    std::vector<ModulationCoeffs<Scalar>> coeffs;
    std::vector<BlockCache> blocks;
    Mat head_in;
  };

  ModulationCoeffs<Scalar> split_coeffs(const RowVec& raw) const;
  RowVec join_coeffs(const ModulationCoeffs<Scalar>& c) const;

  Mat block_forward(const Block& b, const Mat& x, const Mat& past_hat, const Mat& proj_hat,
                    const ModulationCoeffs<Scalar>& c, BlockCache& cache) const;
  Mat block_backward(const Block& b, const ModulationCoeffs<Scalar>& c, const BlockCache& cache, const Mat& dout,
                     const Mat& past_hat, const Mat& proj_hat, Mat& dpast_hat, Mat& dproj_hat,
                     ModulationCoeffs<Scalar>& dc, nn::Gradients<Scalar>& g) const;

  Mat forward(const Latent& x_step, const Conditioning<Scalar>& cond, const Action4& a, int step,
              ForwardCache& cache) const;
  void backward(const ForwardCache& cache, const Mat& dout, nn::Gradients<Scalar>& g) const;
  void check_conditioning(const Latent& x_step, const Conditioning<Scalar>& cond) const;

  ModelConfig config_;
  LatentCodec codec_;
  NoiseSchedule schedule_;
  nn::ParameterSet<Scalar> params_;
  nn::Linear<Scalar> in_proj_, cond_in_, cond_proj_, out_proj_;
  std::size_t pos_ = 0, frame_emb_ = 0;
  std::vector<Block> blocks_;
};

extern template class WorldModel<float>;
extern template class WorldModel<double>;

}  // namespace anwm::wm
