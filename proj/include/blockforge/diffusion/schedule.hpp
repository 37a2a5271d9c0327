#pragma once

#include <vector>

namespace blockforge {

/// DDPM noise tables. Step k (1-based) is stored at index k - 1.
/// `model_steps[k - 1]` is the training timestep fed to the denoiser at step
/// k; it equals k for a full schedule and differs for respaced ones.
struct NoiseSchedule {
  int steps = 0;
  std::vector<double> betas;
  std::vector<double> alphas;
  std::vector<double> alpha_bars;
  std::vector<double> posterior_vars;
  std::vector<int> model_steps;

  double beta(int t) const { return betas[static_cast<std::size_t>(t - 1)]; }
  double alpha(int t) const { return alphas[static_cast<std::size_t>(t - 1)]; }
  double alpha_bar(int t) const { return alpha_bars[static_cast<std::size_t>(t - 1)]; }
  double posterior_var(int t) const { return posterior_vars[static_cast<std::size_t>(t - 1)]; }
  int model_step(int t) const { return model_steps[static_cast<std::size_t>(t - 1)]; }
};

/// Betas linearly spaced from beta_start to beta_end inclusive.
/// Throws BadScheduleParams.
NoiseSchedule make_linear_schedule(int steps, double beta_start = 1e-4, double beta_end = 0.02);

/// Evenly strided sub-schedule with `steps` steps ending at the full
/// schedule's last step; betas are re-derived from the kept alpha_bars.
NoiseSchedule respace(const NoiseSchedule &full, int steps);

} // namespace blockforge
