#include "blockforge/diffusion/loss.hpp"

#include <cmath>

#include "blockforge/core/error.hpp"
#include "blockforge/diffusion/process.hpp"
#include "blockforge/layout/tensor.hpp"

namespace blockforge {

NoiseDraw draw_noise(Rng &rng, int batch, Eigen::Index rows, const NoiseSchedule &sched) {
  NoiseDraw d;
  d.steps.reserve(static_cast<std::size_t>(batch));
  for (int b = 0; b < batch; ++b) d.steps.push_back(rng.uniform_int(1, sched.steps));
  d.eps = standard_normal(rng, rows, kLayoutDims);
  return d;
}

LossTerms diffusion_loss(const DenoiserModel &model, const Matrix &x0,
                         const std::vector<std::vector<int>> &tokens, const NoiseDraw &draw,
                         const NoiseSchedule &sched, bool iou_loss, nn::Gradients *grads) {
  const Eigen::Index n = model.config().max_boxes;
  const auto batch = static_cast<Eigen::Index>(draw.steps.size());
  if (x0.rows() != batch * n || x0.cols() != kLayoutDims || draw.eps.rows() != x0.rows() ||
      draw.eps.cols() != x0.cols()) {
    throw Error(ErrorCode::BadShape, "loss inputs must be (batch * max_boxes) x dims");
  }

  Matrix xt(x0.rows(), x0.cols());
  Matrix x0_addend(x0.rows(), x0.cols());
  std::vector<double> eps_factor(static_cast<std::size_t>(batch));
  std::vector<double> iou_weight(static_cast<std::size_t>(batch));
  std::vector<int> model_steps(static_cast<std::size_t>(batch));
  for (Eigen::Index s = 0; s < batch; ++s) {
    const int t = draw.steps[static_cast<std::size_t>(s)];
    const double ab = sched.alpha_bar(t);
    const double sa = std::sqrt(ab), sb = std::sqrt(1.0 - ab);
    xt.middleRows(s * n, n) = sa * x0.middleRows(s * n, n) + sb * draw.eps.middleRows(s * n, n);
    x0_addend.middleRows(s * n, n) = xt.middleRows(s * n, n) / sa;
    eps_factor[static_cast<std::size_t>(s)] = -sb / sa;
    iou_weight[static_cast<std::size_t>(s)] = kIouLossWeight * ab / static_cast<double>(batch);
    model_steps[static_cast<std::size_t>(s)] = sched.model_step(t);
  }

  nn::Tape tape(grads != nullptr);
  nn::Var eps_hat = model.forward(tape, xt, model_steps, tokens);
  nn::Var noise = nn::mean_squared_error(eps_hat, draw.eps);
  nn::Var total = noise;
  LossTerms out;
  out.noise_term = noise.value()(0, 0);
  if (iou_loss) {
    nn::Var x0_hat = nn::segment_affine(eps_hat, x0_addend, eps_factor, n);
    const Matrix &est = x0_hat.value();
    std::vector<bool> mask(static_cast<std::size_t>(est.rows()));
    for (Eigen::Index r = 0; r < est.rows(); ++r) {
      const int c = row_category(est, r);
      mask[static_cast<std::size_t>(r)] = c != CategoryTaxonomy::kWall && c != CategoryTaxonomy::kEmpty;
    }
    nn::Var penalty = nn::iou_penalty(x0_hat, iou_weight, mask, n, kMinBoxSize);
    out.iou_term = penalty.value()(0, 0);
    total = nn::add(noise, penalty);
  }
  out.total = total.value()(0, 0);
  if (grads) {
    tape.backward(total);
    *grads = tape.parameter_grads();
  }
  return out;
}

LossTerms diffusion_loss(const DenoiserModel &model, const Matrix &x0,
                         const std::vector<std::vector<int>> &tokens, Rng &rng,
                         const NoiseSchedule &sched, bool iou_loss, nn::Gradients *grads) {
  const NoiseDraw draw = draw_noise(rng, static_cast<int>(tokens.size()), x0.rows(), sched);
  return diffusion_loss(model, x0, tokens, draw, sched, iou_loss, grads);
}

} // namespace blockforge
