#include "blockforge/diffusion/process.hpp"

#include <cmath>

#include "blockforge/core/error.hpp"

namespace blockforge {

namespace {

void check_step(int t, const NoiseSchedule &sched) {
  if (t < 1 || t > sched.steps) throw Error(ErrorCode::InvalidArgument, "timestep out of range");
}

} // namespace

LayoutTensor q_sample(const LayoutTensor &x0, int t, const Matrix &eps, const NoiseSchedule &sched) {
  check_step(t, sched);
  if (eps.rows() != x0.values.rows() || eps.cols() != x0.values.cols()) {
    throw Error(ErrorCode::BadShape, "noise shape differs from x0");
  }
  const double ab = sched.alpha_bar(t);
  return {std::sqrt(ab) * x0.values + std::sqrt(1.0 - ab) * eps};
}

LayoutTensor predict_x0(const LayoutTensor &xt, const Matrix &eps_hat, int t, const NoiseSchedule &sched) {
  check_step(t, sched);
  if (eps_hat.rows() != xt.values.rows() || eps_hat.cols() != xt.values.cols()) {
    throw Error(ErrorCode::BadShape, "noise shape differs from xt");
  }
  const double ab = sched.alpha_bar(t);
  return {(xt.values - std::sqrt(1.0 - ab) * eps_hat) / std::sqrt(ab)};
}

Matrix standard_normal(Rng &rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

} // namespace blockforge
