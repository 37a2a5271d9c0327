#pragma once

#include <map>
#include <string>

#include "blockforge/nn/tape.hpp"

namespace blockforge::nn {

struct AdamOptions {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Global gradient-norm clip; <= 0 disables clipping.
  double max_grad_norm = 1.0;
};

class Adam {
public:
  explicit Adam(AdamOptions options) : options_(options) {}

  /// Applies one update to every parameter that has a gradient entry.
  /// Returns the pre-clip global gradient norm.
  double step(std::map<std::string, Matrix> &params, const Gradients &grads);

  long long steps_taken() const { return step_; }

private:
  AdamOptions options_;
  long long step_ = 0;
  std::map<std::string, Matrix> m_;
  std::map<std::string, Matrix> v_;
};

} // namespace blockforge::nn
