#pragma once

#include <Eigen/Core>

namespace anwm::wm {

/// C x h x w latent stored token-major: row (i * w + j) holds the C channels
/// of cell (i, j).
template <typename Scalar>
struct LatentGrid {
  using Tokens = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  int channels = 0, height = 0, width = 0;
  Tokens tokens;

  LatentGrid() = default;
  LatentGrid(int c, int h, int w) : channels(c), height(h), width(w), tokens(Tokens::Zero(h * w, c)) {}
  LatentGrid(int c, int h, int w, Tokens t) : channels(c), height(h), width(w), tokens(std::move(t)) {}

  Scalar& at(int c, int i, int j) { return tokens(i * width + j, c); }
  Scalar at(int c, int i, int j) const { return tokens(i * width + j, c); }
  int num_tokens() const { return height * width; }

  template <typename Other>
  LatentGrid<Other> cast() const {
    return {channels, height, width, tokens.template cast<Other>()};
  }

  bool same_shape(const LatentGrid& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

}  // namespace anwm::wm
