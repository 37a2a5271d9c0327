#include "blockforge/diffusion/schedule.hpp"

#include "blockforge/core/error.hpp"

namespace blockforge {

namespace {

void fill_derived(NoiseSchedule &s) {
  const auto n = static_cast<std::size_t>(s.steps);
  s.alphas.resize(n);
  s.alpha_bars.resize(n);
  s.posterior_vars.resize(n);
  double running = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    s.alphas[i] = 1.0 - s.betas[i];
    running *= s.alphas[i];
    s.alpha_bars[i] = running;
    s.posterior_vars[i] =
        i == 0 ? 0.0 : (1.0 - s.alpha_bars[i - 1]) / (1.0 - s.alpha_bars[i]) * s.betas[i];
  }
}

} // namespace

NoiseSchedule make_linear_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1 || !(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end) {
    throw Error(ErrorCode::BadScheduleParams, "need steps >= 1 and 0 < beta_start <= beta_end < 1");
  }
  NoiseSchedule s;
  s.steps = steps;
  s.betas.resize(static_cast<std::size_t>(steps));
  s.model_steps.resize(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    const double f = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    s.betas[static_cast<std::size_t>(i)] = beta_start + f * (beta_end - beta_start);
    s.model_steps[static_cast<std::size_t>(i)] = i + 1;
  }
  fill_derived(s);
  return s;
}

NoiseSchedule respace(const NoiseSchedule &full, int steps) {
  if (steps < 1 || steps > full.steps) {
    throw Error(ErrorCode::BadScheduleParams, "respaced step count must be in [1, steps]");
  }
  if (steps == full.steps) return full;
  NoiseSchedule s;
  s.steps = steps;
  double prev_bar = 1.0;
  for (int k = 1; k <= steps; ++k) {
    // Evenly spaced, last kept step is the full schedule's last step.
    const int t = static_cast<int>((static_cast<long long>(k) * full.steps + steps - 1) / steps);
    const double bar = full.alpha_bar(t);
    s.model_steps.push_back(full.model_step(t));
    s.betas.push_back(1.0 - bar / prev_bar);
    prev_bar = bar;
  }
  fill_derived(s);
  return s;
}

} // namespace blockforge
