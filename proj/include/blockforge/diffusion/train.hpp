#pragma once

#include <cstdint>
#include <functional>
#include <json.hpp>
#include <string>
#include <vector>

#include "blockforge/diffusion/denoiser.hpp"
#include "blockforge/diffusion/loss.hpp"
#include "blockforge/layout/box.hpp"

namespace blockforge {

/// Reference training scale of the original method.
inline constexpr int kPaperEpochs = 50000;
inline constexpr int kPaperBatchSize = 64;
inline constexpr double kPaperLearningRate = 2e-4;
inline constexpr int kPaperSteps = 1000;
inline constexpr double kPaperBetaStart = 1e-4;
inline constexpr double kPaperBetaEnd = 0.02;

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  int d_model = 128;
  int layers = 4;
  int heads = 4;
  int ffn_multiplier = 4;
  int max_boxes = 32;
  int diffusion_steps = kPaperSteps;
  double beta_start = kPaperBetaStart;
  double beta_end = kPaperBetaEnd;
  bool padreal = true;
  bool spatial_encoding = true;
  bool iou_loss = true;
  double grad_clip = 1.0;
  /// Stop after this many optimizer steps (0 = run all epochs).
  long long max_steps = 0;
  std::uint64_t seed = 0;

  DenoiserConfig denoiser() const;
  nlohmann::ordered_json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json &doc);
  /// JSON object or "key = value" lines ('#' comments allowed).
  static TrainConfig parse(const std::string &text);
};

struct EpochLog {
  int epoch = 0;
  long long steps = 0;
  double noise_term = 0.0;
  double iou_term = 0.0;
  double total = 0.0;
};

std::string epoch_log_line(const EpochLog &log);

struct TrainResult {
  DenoiserModel model;
  std::vector<EpochLog> log;
  /// Per-step losses, in order.
  std::vector<LossTerms> step_losses;
};

/// Trains a fresh model. Per epoch the dataset is shuffled; every sample gets
/// a random augmentation and padding (PadReal or zeros per config) before
/// encoding. Deterministic for a fixed seed. Throws EmptyDataset.
TrainResult train(const std::vector<BoxLayout> &dataset, const TrainConfig &config,
                  const std::function<void(const EpochLog &)> &on_epoch = {});

/// Builds one stacked batch exactly as training does (exposed for tests).
Matrix make_batch(const std::vector<BoxLayout> &layouts, const TrainConfig &config, Rng &rng);

} // namespace blockforge
