#pragma once

#include <vector>

#include "blockforge/core/rng.hpp"
#include "blockforge/diffusion/denoiser.hpp"
#include "blockforge/diffusion/schedule.hpp"

namespace blockforge {

inline constexpr double kIouLossWeight = 0.1;

struct LossTerms {
  double total = 0.0;
  double noise_term = 0.0;
  double iou_term = 0.0;
};

/// Per-sample timesteps in [1, T] and the matching standard-normal noise.
struct NoiseDraw {
  std::vector<int> steps;
  Matrix eps;
};

/// Draws the timesteps first (one per sample, in order), then the noise
/// matrix row-major.
NoiseDraw draw_noise(Rng &rng, int batch, Eigen::Index rows, const NoiseSchedule &sched);

/// Training objective for one batch of stacked padded rows.
///
/// noise_term is the mean squared error between the drawn noise and the
/// prediction. iou_term averages, over the batch, 0.1 * abar_t times the
/// pairwise IoU sum of the clean-layout estimate's boxes, counting only rows
/// whose argmax class is neither wall nor empty. When `grads` is non-null the
/// gradient of total w.r.t. every parameter is written into it.
LossTerms diffusion_loss(const DenoiserModel &model, const Matrix &x0,
                         const std::vector<std::vector<int>> &tokens, const NoiseDraw &draw,
                         const NoiseSchedule &sched, bool iou_loss, nn::Gradients *grads);

LossTerms diffusion_loss(const DenoiserModel &model, const Matrix &x0,
                         const std::vector<std::vector<int>> &tokens, Rng &rng,
                         const NoiseSchedule &sched, bool iou_loss, nn::Gradients *grads);

} // namespace blockforge
