#pragma once

#include <string>
#include <vector>

#include "blockforge/core/rng.hpp"
#include "blockforge/diffusion/denoiser.hpp"
#include "blockforge/diffusion/schedule.hpp"
#include "blockforge/layout/box.hpp"

namespace blockforge {

/// Ancestral DDPM sampling with posterior variance, batched over prompts.
/// `sampling_steps` = 0 runs every step of `sched`; otherwise the schedule is
/// respaced. Returns the final stacked rows before decoding.
Matrix sample_rows(const DenoiserModel &model, const NoiseSchedule &sched,
                   const std::vector<std::string> &prompts, Rng &rng, int sampling_steps = 0);

/// Samples one layout per prompt and decodes with empty rows dropped.
/// Work is split into chunks of at most `chunk` layouts.
std::vector<BoxLayout> sample_layouts(const DenoiserModel &model, const NoiseSchedule &sched,
                                      const std::vector<std::string> &prompts, Rng &rng,
                                      int sampling_steps = 0, int chunk = 64);

/// `count` layouts for one prompt.
std::vector<BoxLayout> sample(const DenoiserModel &model, const NoiseSchedule &sched,
                              const std::string &prompt, int count, Rng &rng, int sampling_steps = 0);

} // namespace blockforge
