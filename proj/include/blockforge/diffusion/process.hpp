#pragma once

#include <vector>

#include "blockforge/core/matrix.hpp"
#include "blockforge/core/rng.hpp"
#include "blockforge/diffusion/schedule.hpp"
#include "blockforge/layout/tensor.hpp"

namespace blockforge {

/// sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps. Throws BadShape.
LayoutTensor q_sample(const LayoutTensor &x0, int t, const Matrix &eps, const NoiseSchedule &sched);

/// (xt - sqrt(1 - abar_t) * eps_hat) / sqrt(abar_t).
LayoutTensor predict_x0(const LayoutTensor &xt, const Matrix &eps_hat, int t, const NoiseSchedule &sched);

/// Matrix of i.i.d. standard normals.
Matrix standard_normal(Rng &rng, Eigen::Index rows, Eigen::Index cols);

} // namespace blockforge
