#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <numeric>

#include "blockforge/core/error.hpp"
#include "blockforge/diffusion/checkpoint.hpp"
#include "blockforge/diffusion/denoiser.hpp"
#include "blockforge/diffusion/loss.hpp"
#include "blockforge/diffusion/process.hpp"
#include "blockforge/diffusion/sample.hpp"
#include "blockforge/diffusion/schedule.hpp"
#include "blockforge/diffusion/text.hpp"
#include "blockforge/diffusion/train.hpp"
#include "blockforge/layout/ops.hpp"
#include "blockforge/layout/tensor.hpp"
#include "blockforge/synth/synth.hpp"

using namespace blockforge;

namespace {

DenoiserConfig tiny_config(int n = 6, int d = 16, int layers = 2, int heads = 2) {
  DenoiserConfig c;
  c.max_boxes = n;
  c.d_model = d;
  c.layers = layers;
  c.heads = heads;
  c.ffn_multiplier = 2;
  return c;
}

/// Adds noise to every parameter so zero-initialized gates are active.
void perturb(DenoiserModel &model, Rng &rng, double scale) {
  for (auto &[name, m] : model.parameters()) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += scale * rng.normal();
  }
}

Matrix random_rows(Rng &rng, Eigen::Index rows) {
  Matrix m(rows, kLayoutDims);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

// ---------------------------------------------------------------------------
// Straight-line reference of the denoiser, written per sample with explicit
// loops so it shares no code path with the tape-based forward.

Matrix ref_layer_norm(const Matrix &x) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double mean = 0.0, var = 0.0;
    for (Eigen::Index c = 0; c < x.cols(); ++c) mean += x(r, c);
    mean /= static_cast<double>(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) var += (x(r, c) - mean) * (x(r, c) - mean);
    var /= static_cast<double>(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) out(r, c) = (x(r, c) - mean) / std::sqrt(var + 1e-6);
  }
  return out;
}

Matrix ref_linear(const Matrix &x, const std::map<std::string, Matrix> &p, const std::string &name) {
  const Matrix &w = p.at(name + ".weight");
  const Matrix &b = p.at(name + ".bias");
  Matrix out(x.rows(), w.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) {
      double acc = b(0, c);
      for (Eigen::Index k = 0; k < x.cols(); ++k) acc += x(r, k) * w(k, c);
      out(r, c) = acc;
    }
  }
  return out;
}

Matrix ref_silu(Matrix x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = x.data()[i] / (1.0 + std::exp(-x.data()[i]));
  return x;
}

Matrix ref_gelu(Matrix x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    x.data()[i] = 0.5 * v * (1.0 + std::tanh(std::sqrt(2.0 / M_PI) * (v + 0.044715 * v * v * v)));
  }
  return x;
}

Matrix ref_attention(const Matrix &q, const Matrix &k, const Matrix &v, int heads) {
  const Eigen::Index d = q.cols(), dh = d / heads;
  Matrix out = Matrix::Zero(q.rows(), d);
  for (int h = 0; h < heads; ++h) {
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
      std::vector<double> w(static_cast<std::size_t>(k.rows()));
      double mx = -1e300;
      for (Eigen::Index j = 0; j < k.rows(); ++j) {
        double dot = 0.0;
        for (Eigen::Index c = 0; c < dh; ++c) dot += q(i, h * dh + c) * k(j, h * dh + c);
        w[static_cast<std::size_t>(j)] = dot / std::sqrt(static_cast<double>(dh));
        mx = std::max(mx, w[static_cast<std::size_t>(j)]);
      }
      double z = 0.0;
      for (auto &x : w) z += (x = std::exp(x - mx));
      for (Eigen::Index c = 0; c < dh; ++c) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < k.rows(); ++j) acc += w[static_cast<std::size_t>(j)] / z * v(j, h * dh + c);
        out(i, h * dh + c) = acc;
      }
    }
  }
  return out;
}

Matrix ref_modulate(const Matrix &x, const Matrix &mod, int shift_chunk, int scale_chunk) {
  const Eigen::Index d = x.cols();
  Matrix out(x.rows(), d);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) {
      out(r, c) = x(r, c) * (1.0 + mod(0, scale_chunk * d + c)) + mod(0, shift_chunk * d + c);
    }
  }
  return out;
}

void ref_gated_add(Matrix &h, const Matrix &y, const Matrix &mod, int gate_chunk) {
  const Eigen::Index d = h.cols();
  for (Eigen::Index r = 0; r < h.rows(); ++r) {
    for (Eigen::Index c = 0; c < d; ++c) h(r, c) += mod(0, gate_chunk * d + c) * y(r, c);
  }
}

Matrix ref_forward(const DenoiserModel &model, const Matrix &xt, const std::vector<int> &steps,
                   const std::vector<std::vector<int>> &tokens) {
  const auto &p = model.parameters();
  const auto &cfg = model.config();
  const Eigen::Index n = cfg.max_boxes, d = cfg.d_model;
  Matrix result(xt.rows(), kLayoutDims);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const Matrix x = xt.middleRows(static_cast<Eigen::Index>(s) * n, n);
    Matrix h = ref_linear(x, p, "input_proj");
    if (cfg.spatial_encoding) h += ref_silu(ref_linear(x.leftCols(3), p, "spatial"));

    Matrix f(1, d);
    const Eigen::Index half = d / 2;
    for (Eigen::Index i = 0; i < half; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
      f(0, i) = std::cos(steps[s] * freq);
      f(0, half + i) = std::sin(steps[s] * freq);
    }
    const Matrix cond = ref_silu(ref_linear(ref_silu(ref_linear(f, p, "time.fc1")), p, "time.fc2"));

    const auto &tk = tokens[s];
    Matrix ctx(1 + static_cast<Eigen::Index>(tk.size()), d);
    ctx.row(0) = p.at("text.null");
    if (!tk.empty()) {
      RowVector mean = RowVector::Zero(d);
      for (int id : tk) mean += p.at("text.embedding").row(id);
      ctx.row(0) += mean / static_cast<double>(tk.size());
    }
    for (std::size_t i = 0; i < tk.size(); ++i) ctx.row(static_cast<Eigen::Index>(i) + 1) = p.at("text.embedding").row(tk[i]);

    for (int b = 0; b < cfg.layers; ++b) {
      const std::string pre = "blocks." + std::to_string(b) + ".";
      const Matrix mod = ref_linear(cond, p, pre + "adaln");
      Matrix a = ref_modulate(ref_layer_norm(h), mod, 0, 1);
      const Matrix qkv = ref_linear(a, p, pre + "self_attn.qkv");
      a = ref_attention(qkv.leftCols(d), qkv.middleCols(d, d), qkv.rightCols(d), cfg.heads);
      ref_gated_add(h, ref_linear(a, p, pre + "self_attn.out"), mod, 2);

      Matrix c = ref_modulate(ref_layer_norm(h), mod, 3, 4);
      const Matrix q = ref_linear(c, p, pre + "cross_attn.q");
      const Matrix kv = ref_linear(ctx, p, pre + "cross_attn.kv");
      c = ref_attention(q, kv.leftCols(d), kv.rightCols(d), cfg.heads);
      ref_gated_add(h, ref_linear(c, p, pre + "cross_attn.out"), mod, 5);

      Matrix m = ref_modulate(ref_layer_norm(h), mod, 6, 7);
      m = ref_linear(ref_gelu(ref_linear(m, p, pre + "mlp.fc1")), p, pre + "mlp.fc2");
      ref_gated_add(h, m, mod, 8);
    }
    const Matrix fmod = ref_linear(cond, p, "final.adaln");
    result.middleRows(static_cast<Eigen::Index>(s) * n, n) =
        ref_linear(ref_modulate(ref_layer_norm(h), fmod, 0, 1), p, "output_proj");
  }
  return result;
}

LossTerms ref_loss(const DenoiserModel &model, const Matrix &x0, const std::vector<std::vector<int>> &tokens,
                   const NoiseDraw &draw, const NoiseSchedule &sched) {
  const Eigen::Index n = model.config().max_boxes;
  const auto batch = draw.steps.size();
  Matrix xt(x0.rows(), x0.cols());
  for (std::size_t s = 0; s < batch; ++s) {
    const double ab = sched.alpha_bar(draw.steps[s]);
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::Index row = static_cast<Eigen::Index>(s) * n + r;
      for (Eigen::Index c = 0; c < x0.cols(); ++c) {
        xt(row, c) = std::sqrt(ab) * x0(row, c) + std::sqrt(1.0 - ab) * draw.eps(row, c);
      }
    }
  }
  const Matrix eps_hat = ref_forward(model, xt, draw.steps, tokens);
  LossTerms out;
  for (Eigen::Index i = 0; i < eps_hat.size(); ++i) {
    const double e = eps_hat.data()[i] - draw.eps.data()[i];
    out.noise_term += e * e;
  }
  out.noise_term /= static_cast<double>(eps_hat.size());
  for (std::size_t s = 0; s < batch; ++s) {
    const double ab = sched.alpha_bar(draw.steps[s]);
    Matrix x0_hat(n, kLayoutDims);
    for (Eigen::Index r = 0; r < n; ++r) {
      const Eigen::Index row = static_cast<Eigen::Index>(s) * n + r;
      for (Eigen::Index c = 0; c < kLayoutDims; ++c) {
        x0_hat(r, c) = (xt(row, c) - std::sqrt(1.0 - ab) * eps_hat(row, c)) / std::sqrt(ab);
      }
    }
    BoxLayout l = decode(LayoutTensor{x0_hat}, false);
    BoxLayout kept;
    for (const auto &b : l.boxes) {
      if (b.category != CategoryTaxonomy::kWall && !b.is_empty()) kept.boxes.push_back(b);
    }
    out.iou_term += kIouLossWeight * ab * pairwise_iou_sum(kept, false, false) / static_cast<double>(batch);
  }
  out.total = out.noise_term + out.iou_term;
  return out;
}

std::vector<std::vector<int>> sample_tokens() { return {prompt_tokens("a red brick house"), prompt_tokens("")}; }

} // namespace

// Test cases named "correctness: ..." form the diffusion correctness suite.

TEST_CASE("correctness: linear schedule endpoints and derived tables") {
  const auto s = make_linear_schedule(1000, 1e-4, 0.02);
  CHECK(s.beta(1) == 1e-4);
  CHECK(s.beta(1000) == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(s.alpha_bar(1) == doctest::Approx(0.9999).epsilon(1e-15));
  // Independent extended-precision product.
  long double bar = 1.0L;
  for (int t = 1; t <= 1000; ++t) {
    const long double beta = 1e-4L + (0.02L - 1e-4L) * static_cast<long double>(t - 1) / 999.0L;
    bar *= 1.0L - beta;
  }
  CHECK(std::abs(s.alpha_bar(1000) - static_cast<double>(bar)) < 1e-9 * static_cast<double>(bar) + 1e-15);
  CHECK(std::abs(s.alpha_bar(1000) - 4.0e-5) < 0.05 * 4.0e-5);
  for (int t = 2; t <= 1000; ++t) {
    CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
    CHECK(s.model_step(t) == t);
  }
  CHECK(s.posterior_var(1) == 0.0);
  CHECK(s.posterior_var(500) == doctest::Approx((1 - s.alpha_bar(499)) / (1 - s.alpha_bar(500)) * s.beta(500)));
  CHECK(make_linear_schedule(1, 0.5, 0.5).beta(1) == 0.5);
}

TEST_CASE("schedule errors and respacing") {
  CHECK_THROWS_WITH_AS(make_linear_schedule(0), doctest::Contains("BadScheduleParams"), Error);
  CHECK_THROWS_AS(make_linear_schedule(10, 0.0, 0.02), Error);
  CHECK_THROWS_AS(make_linear_schedule(10, 0.03, 0.02), Error);
  CHECK_THROWS_AS(make_linear_schedule(10, 1e-4, 1.0), Error);
  const auto full = make_linear_schedule(1000);
  const auto r = respace(full, 100);
  CHECK(r.steps == 100);
  CHECK(r.model_step(100) == 1000);
  CHECK(r.model_step(1) == 10);
  CHECK(r.alpha_bar(100) == doctest::Approx(full.alpha_bar(1000)).epsilon(1e-12));
  CHECK(r.alpha_bar(37) == doctest::Approx(full.alpha_bar(370)).epsilon(1e-12));
  CHECK_THROWS_AS(respace(full, 0), Error);
  CHECK_THROWS_AS(respace(full, 1001), Error);
}

TEST_CASE("correctness: q_sample closed forms and moments") {
  const auto s = make_linear_schedule(1000);
  Rng rng(11);
  LayoutTensor x0{random_rows(rng, 2)};
  const Matrix zero = Matrix::Zero(2, kLayoutDims);
  CHECK((q_sample(x0, 300, zero, s).values - std::sqrt(s.alpha_bar(300)) * x0.values).norm() < 1e-15);
  const Matrix eps = random_rows(rng, 2);
  CHECK((q_sample(LayoutTensor{zero}, 300, eps, s).values - std::sqrt(1 - s.alpha_bar(300)) * eps).norm() < 1e-15);
  CHECK_THROWS_WITH_AS(q_sample(x0, 3, Matrix::Zero(1, kLayoutDims), s), doctest::Contains("BadShape"), Error);

  const int draws = 10000;
  Matrix sum = Matrix::Zero(2, kLayoutDims), sq = Matrix::Zero(2, kLayoutDims);
  for (int i = 0; i < draws; ++i) {
    const Matrix xt = q_sample(x0, 500, standard_normal(rng, 2, kLayoutDims), s).values;
    sum += xt;
    sq += xt.cwiseProduct(xt);
  }
  const double sd = std::sqrt(1 - s.alpha_bar(500));
  int mean_ok = 0;
  for (Eigen::Index i = 0; i < sum.size(); ++i) {
    const double mean = sum.data()[i] / draws;
    const double var = sq.data()[i] / draws - mean * mean;
    CHECK(std::abs(std::sqrt(var) / sd - 1.0) < 0.02);
    // Means are compared on the noise scale: 2% of the standard deviation.
    if (std::abs(mean - std::sqrt(s.alpha_bar(500)) * x0.values.data()[i]) < 0.02 * sd) ++mean_ok;
  }
  CHECK(mean_ok == sum.size());
}

TEST_CASE("correctness: predict_x0 inverts q_sample") {
  const auto s = make_linear_schedule(1000);
  Rng rng(12);
  for (int t = 1; t <= 1000; t += 37) {
    LayoutTensor x0{random_rows(rng, 3)};
    const Matrix eps = random_rows(rng, 3);
    const auto back = predict_x0(q_sample(x0, t, eps, s), eps, t, s);
    CHECK((back.values - x0.values).cwiseAbs().maxCoeff() < 1e-5);
  }
  LayoutTensor xt{random_rows(rng, 2)};
  CHECK((predict_x0(xt, Matrix::Zero(2, kLayoutDims), 700, s).values - xt.values / std::sqrt(s.alpha_bar(700)))
            .norm() < 1e-12);
  // Direct-formula oracle at t = 1000 in extended precision.
  long double bar = 1.0L;
  for (int t = 1; t <= 1000; ++t) bar *= 1.0L - (1e-4L + (0.02L - 1e-4L) * (t - 1) / 999.0L);
  const Matrix eps_hat = random_rows(rng, 2);
  const auto got = predict_x0(xt, eps_hat, 1000, s).values;
  for (Eigen::Index i = 0; i < got.size(); ++i) {
    const long double expect =
        (static_cast<long double>(xt.values.data()[i]) - std::sqrt(1.0L - bar) * eps_hat.data()[i]) / std::sqrt(bar);
    CHECK(std::abs(got.data()[i] - static_cast<double>(expect)) < 1e-6);
  }
}

TEST_CASE("correctness: denoiser is permutation equivariant") {
  DenoiserModel model(tiny_config(), 3);
  Rng rng(13);
  perturb(model, rng, 0.2);
  const Eigen::Index n = 6;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix x = random_rows(rng, 2 * n);
    const std::vector<int> steps{rng.uniform_int(1, 1000), rng.uniform_int(1, 1000)};
    const auto tokens = sample_tokens();
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    Matrix px(x.rows(), x.cols());
    for (Eigen::Index seg = 0; seg < 2; ++seg) {
      for (Eigen::Index i = 0; i < n; ++i) px.row(seg * n + i) = x.row(seg * n + perm[static_cast<std::size_t>(i)]);
    }
    const Matrix out = model.predict(x, steps, tokens);
    const Matrix pout = model.predict(px, steps, tokens);
    double worst = 0.0;
    for (Eigen::Index seg = 0; seg < 2; ++seg) {
      for (Eigen::Index i = 0; i < n; ++i) {
        worst = std::max(worst, (pout.row(seg * n + i) - out.row(seg * n + perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff());
      }
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("correctness: forward and loss match the straight-line reference") {
  DenoiserModel model(tiny_config(), 4);
  Rng rng(14);
  perturb(model, rng, 0.3);
  const Matrix x = random_rows(rng, 12);
  const std::vector<int> steps{17, 903};
  const auto tokens = sample_tokens();
  CHECK((model.predict(x, steps, tokens) - ref_forward(model, x, steps, tokens)).cwiseAbs().maxCoeff() < 1e-5);

  const auto sched = make_linear_schedule(1000);
  Matrix x0 = Matrix::Zero(12, kLayoutDims);
  for (Eigen::Index r = 0; r < 12; ++r) {
    for (int k = 0; k < 3; ++k) {
      x0(r, k) = rng.uniform(0.3, 0.7);
      x0(r, 3 + k) = rng.uniform(0.2, 0.5);
    }
    x0(r, kClassOffset + 1 + r % 4) = 1.0;
  }
  NoiseDraw draw{{40, 120}, random_rows(rng, 12)};
  const auto got = diffusion_loss(model, x0, tokens, draw, sched, true, nullptr);
  const auto want = ref_loss(model, x0, tokens, draw, sched);
  CHECK(std::abs(got.noise_term - want.noise_term) < 1e-5);
  CHECK(std::abs(got.iou_term - want.iou_term) < 1e-5);
  CHECK(std::abs(got.total - want.total) < 1e-5);
  CHECK(got.iou_term >= 0.0);
  const auto no_iou = diffusion_loss(model, x0, tokens, draw, sched, false, nullptr);
  CHECK(no_iou.iou_term == 0.0);
  CHECK(no_iou.total == no_iou.noise_term);
}

TEST_CASE("correctness: loss gradient matches central differences on the tiny model") {
  DenoiserConfig cfg = tiny_config(3, 8, 1, 2);
  DenoiserModel model(cfg, 5);
  Rng rng(15);
  perturb(model, rng, 0.3);
  const auto sched = make_linear_schedule(1000);
  Matrix x0 = Matrix::Zero(6, kLayoutDims);
  for (Eigen::Index r = 0; r < 6; ++r) {
    for (int k = 0; k < 3; ++k) {
      x0(r, k) = rng.uniform(0.35, 0.65);
      x0(r, 3 + k) = rng.uniform(0.3, 0.5);
    }
    x0(r, kClassOffset + 1 + r % 3) = 1.0;
  }
  const auto tokens = sample_tokens();
  NoiseDraw draw{{30, 250}, 0.3 * random_rows(rng, 6)};
  nn::Gradients grads;
  const auto base = diffusion_loss(model, x0, tokens, draw, sched, true, &grads);
  REQUIRE(base.iou_term > 0.0);

  std::vector<int> used_rows;
  for (const auto &t : tokens) used_rows.insert(used_rows.end(), t.begin(), t.end());
  const double h = 1e-3;
  int checked = 0, failed = 0;
  for (auto &[name, value] : model.parameters()) {
    const auto git = grads.find(name);
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      if (name == "text.embedding") {
        const int row = static_cast<int>(i / value.cols());
        if (std::find(used_rows.begin(), used_rows.end(), row) == used_rows.end()) {
          if (git != grads.end()) CHECK(git->second.data()[i] == 0.0);
          continue;
        }
      }
      const double saved = value.data()[i];
      value.data()[i] = saved + h;
      const double up = diffusion_loss(model, x0, tokens, draw, sched, true, nullptr).total;
      value.data()[i] = saved - h;
      const double down = diffusion_loss(model, x0, tokens, draw, sched, true, nullptr).total;
      value.data()[i] = saved;
      const double numeric = (up - down) / (2 * h);
      const double analytic = git == grads.end() ? 0.0 : git->second.data()[i];
      const double err = std::abs(analytic - numeric);
      ++checked;
      // Relative 1e-2, with an absolute floor for entries whose gradient is
      // at the level of the difference quotient's own truncation error.
      if (err > 1e-2 * std::max(std::abs(analytic), std::abs(numeric)) && err > 1e-6) {
        ++failed;
        INFO(name << "[" << i << "] analytic " << analytic << " numeric " << numeric);
        CHECK(err <= 1e-2 * std::max(std::abs(analytic), std::abs(numeric)));
      }
    }
  }
  CHECK(checked > 1000);
  CHECK(failed == 0);
}

TEST_CASE("zero-gate model reduces to the output projection of the tokens") {
  DenoiserModel model(tiny_config(), 6);
  Rng rng(16);
  const Matrix x = random_rows(rng, 6);
  const auto tokens = std::vector<std::vector<int>>{prompt_tokens("house")};
  CHECK(model.predict(x, {5}, tokens).cwiseAbs().maxCoeff() == 0.0);

  auto &w = model.parameters()["output_proj.weight"];
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
  const Matrix a = model.predict(x, {5}, tokens);
  const Matrix b = model.predict(x, {999}, {prompt_tokens("castle")});
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  const auto &p = model.parameters();
  Matrix h = x * p.at("input_proj.weight");
  h.rowwise() += p.at("input_proj.bias").row(0);
  h += ref_silu((x.leftCols(3) * p.at("spatial.weight")).rowwise() + p.at("spatial.bias").row(0));
  const Matrix expect = ref_layer_norm(h) * w;
  CHECK((a - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("spatial encoding separates rows that differ only in center") {
  // Two rows identical except for the center. The input projection's center
  // weights are zeroed so that only the spatial encoder can see the center.
  for (bool spatial : {false, true}) {
    DenoiserConfig cfg = tiny_config(2, 16, 1, 2);
    cfg.spatial_encoding = spatial;
    DenoiserModel model(cfg, 7);
    Rng rng(17);
    perturb(model, rng, 0.2);
    model.parameters()["input_proj.weight"].topRows(3).setZero();
    Matrix x = Matrix::Zero(2, kLayoutDims);
    x.row(0) << 0.2, 0.3, 0.4, 0.1, 0.1, 0.1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0;
    x.row(1) = x.row(0);
    x(1, 0) = 0.8;
    const Matrix out = model.predict(x, {100}, {{}});
    const double diff = (out.row(0) - out.row(1)).cwiseAbs().maxCoeff();
    if (spatial) {
      CHECK(diff > 1e-3);
    } else {
      CHECK(diff < 1e-12);
    }
  }
}

TEST_CASE("denoiser shape errors") {
  DenoiserModel model(tiny_config(), 8);
  CHECK_THROWS_WITH_AS(model.predict(Matrix::Zero(5, kLayoutDims), {1}, {{}}), doctest::Contains("BadShape"), Error);
  CHECK_THROWS_AS(model.predict(Matrix::Zero(6, 7), {1}, {{}}), Error);
  CHECK_THROWS_AS(model.predict(Matrix::Zero(6, kLayoutDims), {1}, {}), Error);
  DenoiserConfig bad = tiny_config();
  bad.heads = 3;
  CHECK_THROWS_AS(DenoiserModel(bad, 1), Error);
}

TEST_CASE("text embedding and tokenizer") {
  CHECK(tokenize("red ROOF.") == tokenize("red roof"));
  CHECK(prompt_tokens("red ROOF.") == prompt_tokens("red roof"));
  CHECK(tokenize("A two-story house!") == std::vector<std::string>{"a", "two", "story", "house"});
  CHECK(prompt_tokens("").empty());
  std::string longp;
  for (int i = 0; i < 50; ++i) longp += "w" + std::to_string(i) + " ";
  CHECK(prompt_tokens(longp).size() == static_cast<std::size_t>(kMaxContext - 1));
  for (const auto *tok : {"a", "house", "roof", "zzz"}) {
    CHECK(token_bucket(tok) >= 0);
    CHECK(token_bucket(tok) < kTextVocabulary);
  }
  // FNV-1a of "a": 0xaf63dc4c8601ec8c.
  CHECK(token_bucket("a") == static_cast<int>(0xaf63dc4c8601ec8cULL % 4096));

  DenoiserModel model(tiny_config(), 9);
  const Matrix empty = model.text_embed("");
  CHECK(empty.rows() == 1);
  CHECK(empty == model.parameters().at("text.null"));
  CHECK(model.text_embed("red roof") == model.text_embed("Red Roof"));
  CHECK(model.text_embed(longp).rows() == kMaxContext);
}

TEST_CASE("sampler contract and determinism") {
  DenoiserModel model(tiny_config(), 10);
  Rng prng(18);
  perturb(model, prng, 0.05);
  const auto sched = make_linear_schedule(1000);
  Rng a(1), b(1);
  const auto la = sample(model, sched, "a house", 4, a, 50);
  const auto lb = sample(model, sched, "a house", 4, b, 50);
  REQUIRE(la.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(la[i] == lb[i]);
    CHECK(la[i].boxes.size() <= 6u);
    for (const auto &box : la[i].boxes) CHECK_FALSE(box.is_empty());
    CHECK(la[i].prompt == "a house");
  }
}

TEST_CASE("untrained sampler follows the closed-form variance cascade") {
  // With eps_theta = 0 each step is x <- x / sqrt(alpha_t) + sqrt(var_t) z, so
  // the per-element variance obeys v_{t-1} = v_t / alpha_t + var_t from v_T = 1.
  DenoiserModel model(tiny_config(3, 8, 1, 2), 11);
  const auto sched = make_linear_schedule(1000);
  double v = 1.0;
  for (int t = 1000; t >= 1; --t) v = v / sched.alpha(t) + sched.posterior_var(t);
  Rng rng(19);
  const std::vector<std::string> prompts(400, "");
  const Matrix rows = sample_rows(model, sched, prompts, rng, 0);
  const double mean = rows.mean();
  const double var = (rows.array() - mean).square().mean();
  CHECK(std::abs(mean) < 0.05 * std::sqrt(v));
  CHECK(std::abs(std::sqrt(var) / std::sqrt(v) - 1.0) < 0.05);
}

TEST_CASE("checkpoint round trip") {
  TrainConfig cfg;
  cfg.d_model = 16;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.max_boxes = 5;
  cfg.seed = 77;
  DenoiserModel model(cfg.denoiser(), 12);
  Rng rng(20);
  perturb(model, rng, 0.1);
  const std::string bytes = checkpoint_bytes(model, cfg);
  CHECK(bytes.substr(0, 4) == "BFCK");
  CHECK(checkpoint_bytes(model, cfg) == bytes);
  const auto loaded = checkpoint_from_bytes(bytes);
  CHECK(loaded.config.to_json() == cfg.to_json());
  CHECK(loaded.model.config() == model.config());
  for (const auto &[name, m] : model.parameters()) {
    const Matrix &l = loaded.model.parameters().at(name);
    CHECK((l - m.cast<float>().cast<double>()).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(checkpoint_bytes(loaded.model, loaded.config) == bytes);
  const Matrix x = random_rows(rng, 5);
  CHECK((loaded.model.predict(x, {3}, {{}}) - model.predict(x, {3}, {{}})).cwiseAbs().maxCoeff() < 1e-4);

  const auto path = std::filesystem::temp_directory_path() / "blockforge_ckpt_test.bfck";
  save_checkpoint(path, model, cfg);
  CHECK(checkpoint_bytes(load_checkpoint(path).model, cfg) == bytes);
  std::filesystem::remove(path);

  CHECK_THROWS_WITH_AS(checkpoint_from_bytes("NOPE"), doctest::Contains("ParseError"), Error);
  CHECK_THROWS_AS(checkpoint_from_bytes(bytes.substr(0, bytes.size() - 3)), Error);
  CHECK_THROWS_WITH_AS(load_checkpoint("/nonexistent/m.bfck"), doctest::Contains("IoError"), Error);
}

TEST_CASE("train config parsing") {
  const auto kv = TrainConfig::parse("# tiny\nepochs = 3\nlearning_rate = 0.01\npadreal = false\n");
  CHECK(kv.epochs == 3);
  CHECK(kv.learning_rate == 0.01);
  CHECK_FALSE(kv.padreal);
  const auto js = TrainConfig::parse(R"({"epochs": 3, "learning_rate": 0.01, "padreal": false})");
  CHECK(js.to_json() == kv.to_json());
  CHECK(TrainConfig::from_json(kv.to_json()).to_json() == kv.to_json());
  CHECK_THROWS_WITH_AS(TrainConfig::parse("bogus = 1"), doctest::Contains("bogus"), Error);
  CHECK_THROWS_AS(TrainConfig::parse("epochs = \"x\""), Error);
  CHECK_THROWS_AS(TrainConfig::parse("epochs 3"), Error);
  CHECK(kPaperEpochs == 50000);
  CHECK(kPaperBatchSize == 64);
  CHECK(kPaperLearningRate == 2e-4);
}

namespace {

TrainConfig tiny_train(std::uint64_t seed) {
  TrainConfig c;
  c.d_model = 32;
  c.layers = 1;
  c.heads = 2;
  c.ffn_multiplier = 2;
  c.max_boxes = 32;
  c.batch_size = 16;
  c.epochs = 1000;
  c.learning_rate = 1e-3;
  c.seed = seed;
  return c;
}

std::vector<BoxLayout> tiny_dataset(int n) {
  SynthConfig sc;
  sc.count = n;
  sc.seed = 5;
  return synth_dataset(sc);
}

} // namespace

TEST_CASE("training determinism, zero learning rate and ablation flags") {
  const auto data = tiny_dataset(16);
  auto cfg = tiny_train(3);
  cfg.max_steps = 3;
  const auto a = train(data, cfg);
  const auto b = train(data, cfg);
  CHECK(checkpoint_bytes(a.model, cfg) == checkpoint_bytes(b.model, cfg));
  REQUIRE(a.step_losses.size() == 3);
  CHECK(a.step_losses[2].total == b.step_losses[2].total);
  CHECK(a.log.size() == 3);
  CHECK(a.log.back().steps == 3);

  auto frozen = cfg;
  frozen.learning_rate = 0.0;
  const auto f = train(data, frozen);
  const DenoiserModel init(cfg.denoiser(), Rng(cfg.seed).split(0).next_u64());
  for (const auto &[name, m] : init.parameters()) CHECK(f.model.parameters().at(name) == m);

  for (int flag = 0; flag < 3; ++flag) {
    auto off = cfg;
    if (flag == 0) off.padreal = false;
    if (flag == 1) off.spatial_encoding = false;
    if (flag == 2) off.iou_loss = false;
    const auto r = train(data, off);
    bool differs = false;
    for (std::size_t i = 0; i < r.step_losses.size(); ++i) differs |= r.step_losses[i].total != a.step_losses[i].total;
    CHECK(differs);
  }
  CHECK_THROWS_WITH_AS(train({}, cfg), doctest::Contains("EmptyDataset"), Error);
}

TEST_CASE("make_batch pads and encodes like training") {
  const auto data = tiny_dataset(3);
  auto cfg = tiny_train(1);
  Rng rng(4);
  const Matrix batch = make_batch(data, cfg, rng);
  CHECK(batch.rows() == 3 * 32);
  for (Eigen::Index r = 0; r < batch.rows(); ++r) CHECK(batch.row(r).tail(CategoryTaxonomy::kOneHotWidth).sum() == 1.0);
  cfg.padreal = false;
  Rng rng2(4);
  const Matrix zeros = make_batch(data, cfg, rng2);
  int zero_rows = 0;
  for (Eigen::Index r = 0; r < zeros.rows(); ++r) zero_rows += zeros.row(r).head(3).isZero() ? 1 : 0;
  CHECK(zero_rows > 0);
}

TEST_CASE("500 training steps reduce the noise loss on every seed") {
  const auto data = tiny_dataset(64);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto cfg = tiny_train(seed);
    cfg.max_steps = 500;
    const auto r = train(data, cfg);
    REQUIRE(r.step_losses.size() == 500);
    auto window_mean = [&](std::size_t from) {
      double s = 0.0;
      for (std::size_t i = from; i < from + 25; ++i) s += r.step_losses[i].noise_term;
      return s / 25.0;
    };
    INFO("seed " << seed << " initial " << window_mean(0) << " final " << window_mean(475));
    CHECK(window_mean(475) < 0.9 * window_mean(0));
  }
}
