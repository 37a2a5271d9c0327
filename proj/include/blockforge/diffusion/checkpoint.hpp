#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>

#include "blockforge/diffusion/denoiser.hpp"
#include "blockforge/diffusion/train.hpp"

namespace blockforge {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// BFCK layout: "BFCK", uint32 version (LE), uint64 header length (LE),
/// UTF-8 JSON header {"config", "tensors": [{name, shape, offset, len}]}
/// with tensors sorted by name, then float32 LE data. `offset` and `len`
/// count bytes from the start of the data section.
std::string checkpoint_bytes(const DenoiserModel &model, const TrainConfig &config);
void save_checkpoint(const std::filesystem::path &path, const DenoiserModel &model,
                     const TrainConfig &config);

struct LoadedCheckpoint {
  DenoiserModel model;
  TrainConfig config;
};

LoadedCheckpoint checkpoint_from_bytes(const std::string &bytes);
LoadedCheckpoint load_checkpoint(const std::filesystem::path &path);

} // namespace blockforge
