#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "blockforge/core/matrix.hpp"
#include "blockforge/core/rng.hpp"
#include "blockforge/nn/tape.hpp"

namespace blockforge {

struct DenoiserConfig {
  int max_boxes = 32;
  int d_model = 128;
  int layers = 4;
  int heads = 4;
  int ffn_multiplier = 4;
  bool spatial_encoding = true;

  friend bool operator==(const DenoiserConfig &, const DenoiserConfig &) = default;
};

/// Permutation-equivariant transformer predicting per-attribute noise for a
/// padded set of layout rows.
///
/// Each box row becomes a token through a linear input projection; with
/// spatial encoding on, a single SiLU layer over the row's noised center is
/// added. There is no sequence positional encoding. Blocks apply self
/// attention over the box tokens, cross attention to the prompt context and a
/// feed-forward layer, each wrapped in AdaLN (shift/scale/gate from the
/// timestep embedding). All AdaLN projections and the output weight start at
/// zero, so an untrained model predicts zero noise.
class DenoiserModel {
public:
  DenoiserModel() = default;
  DenoiserModel(const DenoiserConfig &config, std::uint64_t seed);

  const DenoiserConfig &config() const { return config_; }

  std::map<std::string, Matrix> &parameters() { return params_; }
  const std::map<std::string, Matrix> &parameters() const { return params_; }

  /// Total scalar parameter count.
  std::size_t parameter_count() const;

  /// Forward pass on stacked rows: `xt` has (B * max_boxes) rows of the
  /// layout row format, `steps` holds B timesteps and `tokens` B prompt
  /// token lists. Returns the (B * max_boxes) x dims noise prediction.
  nn::Var forward(nn::Tape &tape, const Matrix &xt, const std::vector<int> &steps,
                  const std::vector<std::vector<int>> &tokens) const;

  /// Convenience inference wrapper.
  Matrix predict(const Matrix &xt, const std::vector<int> &steps,
                 const std::vector<std::vector<int>> &tokens) const;

  /// Context rows produced for one prompt (pooled summary, then tokens).
  Matrix text_embed(const std::string &prompt) const;

private:
  nn::Var param(nn::Tape &tape, const std::string &name) const;

  DenoiserConfig config_;
  std::map<std::string, Matrix> params_;
};

/// Sinusoidal timestep features, one row per step, `width` columns.
Matrix timestep_features(const std::vector<int> &steps, int width);

} // namespace blockforge
