#include "blockforge/diffusion/sample.hpp"

#include <cmath>

#include "blockforge/diffusion/process.hpp"
#include "blockforge/diffusion/text.hpp"
#include "blockforge/layout/tensor.hpp"

namespace blockforge {

Matrix sample_rows(const DenoiserModel &model, const NoiseSchedule &sched,
                   const std::vector<std::string> &prompts, Rng &rng, int sampling_steps) {
  const NoiseSchedule steps = sampling_steps > 0 ? respace(sched, sampling_steps) : sched;
  const Eigen::Index n = model.config().max_boxes;
  const auto batch = static_cast<Eigen::Index>(prompts.size());
  std::vector<std::vector<int>> tokens;
  tokens.reserve(prompts.size());
  for (const auto &p : prompts) tokens.push_back(prompt_tokens(p));

  Matrix x = standard_normal(rng, batch * n, kLayoutDims);
  for (int t = steps.steps; t >= 1; --t) {
    const std::vector<int> model_steps(static_cast<std::size_t>(batch), steps.model_step(t));
    const Matrix eps_hat = model.predict(x, model_steps, tokens);
    const double coef = steps.beta(t) / std::sqrt(1.0 - steps.alpha_bar(t));
    x = (x - coef * eps_hat) / std::sqrt(steps.alpha(t));
    if (t > 1) x += std::sqrt(steps.posterior_var(t)) * standard_normal(rng, x.rows(), x.cols());
  }
  return x;
}

std::vector<BoxLayout> sample_layouts(const DenoiserModel &model, const NoiseSchedule &sched,
                                      const std::vector<std::string> &prompts, Rng &rng,
                                      int sampling_steps, int chunk) {
  std::vector<BoxLayout> out;
  const Eigen::Index n = model.config().max_boxes;
  for (std::size_t start = 0; start < prompts.size(); start += static_cast<std::size_t>(chunk)) {
    const std::size_t end = std::min(prompts.size(), start + static_cast<std::size_t>(chunk));
    const std::vector<std::string> part(prompts.begin() + static_cast<std::ptrdiff_t>(start),
                                        prompts.begin() + static_cast<std::ptrdiff_t>(end));
    const Matrix rows = sample_rows(model, sched, part, rng, sampling_steps);
    for (std::size_t i = 0; i < part.size(); ++i) {
      LayoutTensor t{rows.middleRows(static_cast<Eigen::Index>(i) * n, n)};
      BoxLayout layout = decode(t, true);
      layout.id = "sample_" + std::to_string(start + i);
      layout.prompt = part[i];
      out.push_back(std::move(layout));
    }
  }
  return out;
}

std::vector<BoxLayout> sample(const DenoiserModel &model, const NoiseSchedule &sched,
                              const std::string &prompt, int count, Rng &rng, int sampling_steps) {
  return sample_layouts(model, sched, std::vector<std::string>(static_cast<std::size_t>(count), prompt),
                        rng, sampling_steps);
}

} // namespace blockforge
