#include "blockforge/diffusion/denoiser.hpp"

#include <cmath>

#include "blockforge/core/error.hpp"
#include "blockforge/diffusion/text.hpp"
#include "blockforge/layout/tensor.hpp"

namespace blockforge {

namespace {

Matrix xavier(Rng &rng, int fan_in, int fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
  return m;
}

Matrix gaussian(Rng &rng, int rows, int cols, double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * rng.normal();
  return m;
}

std::string block_name(int index, const char *suffix) {
  return "blocks." + std::to_string(index) + "." + suffix;
}

} // namespace

DenoiserModel::DenoiserModel(const DenoiserConfig &config, std::uint64_t seed) : config_(config) {
  if (config.d_model <= 0 || config.heads <= 0 || config.d_model % config.heads != 0 ||
      config.layers < 0 || config.max_boxes <= 0 || config.ffn_multiplier <= 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid denoiser configuration");
  }
  Rng rng(seed);
  const int d = config.d_model;
  const int ffn = d * config.ffn_multiplier;
  auto zeros = [](int r, int c) { return Matrix::Zero(r, c).eval(); };

  params_["input_proj.weight"] = xavier(rng, kLayoutDims, d);
  params_["input_proj.bias"] = zeros(1, d);
  params_["spatial.weight"] = xavier(rng, 3, d);
  params_["spatial.bias"] = zeros(1, d);
  params_["time.fc1.weight"] = xavier(rng, d, d);
  params_["time.fc1.bias"] = zeros(1, d);
  params_["time.fc2.weight"] = xavier(rng, d, d);
  params_["time.fc2.bias"] = zeros(1, d);
  params_["text.embedding"] = gaussian(rng, kTextVocabulary, d, 1.0);
  params_["text.null"] = gaussian(rng, 1, d, 1.0);
  for (int b = 0; b < config.layers; ++b) {
    params_[block_name(b, "adaln.weight")] = zeros(d, 9 * d);
    params_[block_name(b, "adaln.bias")] = zeros(1, 9 * d);
    params_[block_name(b, "self_attn.qkv.weight")] = xavier(rng, d, 3 * d);
    params_[block_name(b, "self_attn.qkv.bias")] = zeros(1, 3 * d);
    params_[block_name(b, "self_attn.out.weight")] = xavier(rng, d, d);
    params_[block_name(b, "self_attn.out.bias")] = zeros(1, d);
    params_[block_name(b, "cross_attn.q.weight")] = xavier(rng, d, d);
    params_[block_name(b, "cross_attn.q.bias")] = zeros(1, d);
    params_[block_name(b, "cross_attn.kv.weight")] = xavier(rng, d, 2 * d);
    params_[block_name(b, "cross_attn.kv.bias")] = zeros(1, 2 * d);
    params_[block_name(b, "cross_attn.out.weight")] = xavier(rng, d, d);
    params_[block_name(b, "cross_attn.out.bias")] = zeros(1, d);
    params_[block_name(b, "mlp.fc1.weight")] = xavier(rng, d, ffn);
    params_[block_name(b, "mlp.fc1.bias")] = zeros(1, ffn);
    params_[block_name(b, "mlp.fc2.weight")] = xavier(rng, ffn, d);
    params_[block_name(b, "mlp.fc2.bias")] = zeros(1, d);
  }
  params_["final.adaln.weight"] = zeros(d, 2 * d);
  params_["final.adaln.bias"] = zeros(1, 2 * d);
  params_["output_proj.weight"] = zeros(d, kLayoutDims);
  params_["output_proj.bias"] = zeros(1, kLayoutDims);
}

std::size_t DenoiserModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto &[name, m] : params_) n += static_cast<std::size_t>(m.size());
  return n;
}

nn::Var DenoiserModel::param(nn::Tape &tape, const std::string &name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error(ErrorCode::InvalidArgument, "missing parameter " + name);
  return tape.parameter(name, it->second);
}

Matrix timestep_features(const std::vector<int> &steps, int width) {
  const int half = width / 2;
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(steps.size()), width);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const double t = static_cast<double>(steps[s]);
    for (int i = 0; i < half; ++i) {
      const double freq = std::exp(-std::log(10000.0) * static_cast<double>(i) / static_cast<double>(half));
      out(static_cast<Eigen::Index>(s), i) = std::cos(t * freq);
      out(static_cast<Eigen::Index>(s), half + i) = std::sin(t * freq);
    }
  }
  return out;
}

nn::Var DenoiserModel::forward(nn::Tape &tape, const Matrix &xt, const std::vector<int> &steps,
                               const std::vector<std::vector<int>> &tokens) const {
  using namespace nn;
  const Eigen::Index n = config_.max_boxes;
  const Eigen::Index batch = static_cast<Eigen::Index>(steps.size());
  const Eigen::Index d = config_.d_model;
  if (xt.cols() != kLayoutDims || xt.rows() != batch * n) {
    throw Error(ErrorCode::BadShape, "denoiser input must be (batch * max_boxes) x " +
                                         std::to_string(kLayoutDims));
  }
  if (tokens.size() != steps.size()) throw Error(ErrorCode::BadShape, "one token list per sample");

  auto linear = [&](Var x, const std::string &prefix) {
    return add_row(matmul(x, param(tape, prefix + ".weight")), param(tape, prefix + ".bias"));
  };

  Var x = tape.constant(xt);
  Var h = linear(x, "input_proj");
  if (config_.spatial_encoding) h = add(h, silu(linear(cols(x, 0, 3), "spatial")));

  Var temb = tape.constant(timestep_features(steps, config_.d_model));
  temb = linear(silu(linear(temb, "time.fc1")), "time.fc2");
  Var cond = silu(temb);

  Var ctx = text_context(param(tape, "text.embedding"), param(tape, "text.null"), tokens);

  std::vector<Eigen::Index> self_offsets(static_cast<std::size_t>(batch) + 1);
  std::vector<Eigen::Index> ctx_offsets(static_cast<std::size_t>(batch) + 1);
  ctx_offsets[0] = 0;
  for (Eigen::Index s = 0; s <= batch; ++s) self_offsets[static_cast<std::size_t>(s)] = s * n;
  for (std::size_t s = 0; s < tokens.size(); ++s) {
    ctx_offsets[s + 1] = ctx_offsets[s] + 1 + static_cast<Eigen::Index>(tokens[s].size());
  }

  for (int b = 0; b < config_.layers; ++b) {
    const std::string p = "blocks." + std::to_string(b) + ".";
    Var mod = linear(cond, p + "adaln");
    auto chunk = [&](int i) { return cols(mod, i * d, d); };

    Var a = modulate(layer_norm(h), chunk(0), chunk(1), n);
    Var qkv = linear(a, p + "self_attn.qkv");
    a = attention(cols(qkv, 0, d), cols(qkv, d, d), cols(qkv, 2 * d, d), self_offsets, self_offsets,
                  config_.heads);
    h = gated_residual(h, linear(a, p + "self_attn.out"), chunk(2), n);

    Var c = modulate(layer_norm(h), chunk(3), chunk(4), n);
    Var q = linear(c, p + "cross_attn.q");
    Var kv = linear(ctx, p + "cross_attn.kv");
    c = attention(q, cols(kv, 0, d), cols(kv, d, d), self_offsets, ctx_offsets, config_.heads);
    h = gated_residual(h, linear(c, p + "cross_attn.out"), chunk(5), n);

    Var f = modulate(layer_norm(h), chunk(6), chunk(7), n);
    f = linear(gelu(linear(f, p + "mlp.fc1")), p + "mlp.fc2");
    h = gated_residual(h, f, chunk(8), n);
  }

  Var fmod = linear(cond, "final.adaln");
  Var out = modulate(layer_norm(h), cols(fmod, 0, d), cols(fmod, d, d), n);
  return linear(out, "output_proj");
}

Matrix DenoiserModel::predict(const Matrix &xt, const std::vector<int> &steps,
                              const std::vector<std::vector<int>> &tokens) const {
  nn::Tape tape(false);
  return forward(tape, xt, steps, tokens).value();
}

Matrix DenoiserModel::text_embed(const std::string &prompt) const {
  nn::Tape tape(false);
  return nn::text_context(param(tape, "text.embedding"), param(tape, "text.null"),
                          {prompt_tokens(prompt)})
      .value();
}

} // namespace blockforge
