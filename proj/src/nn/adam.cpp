#include "blockforge/nn/adam.hpp"

#include <cmath>

namespace blockforge::nn {

double Adam::step(std::map<std::string, Matrix> &params, const Gradients &grads) {
  double sq = 0.0;
  for (const auto &[name, g] : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  const double clip = (options_.max_grad_norm > 0.0 && norm > options_.max_grad_norm)
                          ? options_.max_grad_norm / norm
                          : 1.0;

  ++step_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
  for (const auto &[name, g_raw] : grads) {
    auto pit = params.find(name);
    if (pit == params.end()) continue;
    Matrix &p = pit->second;
    auto [mit, m_new] = m_.try_emplace(name);
    if (m_new) mit->second = Matrix::Zero(p.rows(), p.cols());
    auto [vit, v_new] = v_.try_emplace(name);
    if (v_new) vit->second = Matrix::Zero(p.rows(), p.cols());
    Matrix &m = mit->second;
    Matrix &v = vit->second;
    const Matrix g = g_raw * clip;
    m = options_.beta1 * m + (1.0 - options_.beta1) * g;
    v.array() = options_.beta2 * v.array() + (1.0 - options_.beta2) * g.array().square();
    if (options_.learning_rate == 0.0) continue;
    p.array() -= options_.learning_rate * (m.array() / bc1) /
                 ((v.array() / bc2).sqrt() + options_.epsilon);
  }
  return norm;
}

} // namespace blockforge::nn
