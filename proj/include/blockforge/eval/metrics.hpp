#pragma once

#include <cstdint>
#include <json.hpp>
#include <vector>

#include "blockforge/core/matrix.hpp"
#include "blockforge/layout/box.hpp"

namespace blockforge {

inline constexpr int kFeatureDims = 91;

/// Handcrafted layout descriptor:
///   [0, 14)  category histogram normalized by the total box count
///   [14, 17) center mean, [17, 20) center std (population), real boxes only
///   [20, 23) size mean,   [23, 26) size std
///   [26]     pairwise IoU sum excluding walls
///   [27, 91) 8x8 luminance downsample of the 256 px raster
/// Throws EmptyLayout when the layout has no real boxes.
std::vector<double> features(const BoxLayout &layout);

/// Stacks feature vectors as rows.
Matrix feature_matrix(const std::vector<BoxLayout> &layouts);

/// Frechet distance between Gaussian fits of the row sets (covariances get
/// +1e-6 I). Throws TooFewSamples when either set has < 2 rows.
double frechet_distance(const Matrix &a, const Matrix &b);

/// Mean over `repeats` of the unbiased MMD^2 with the cubic polynomial kernel
/// (x.y / d + 1)^3 on seeded subsets of size min(subset, |a|, |b|) drawn
/// without replacement. Throws TooFewSamples when a set has < 2 rows.
double kernel_distance(const Matrix &a, const Matrix &b, int subset = 100, int repeats = 10,
                       std::uint64_t seed = 0);

/// Unbiased MMD^2 of two full sets (no subsampling).
double mmd_unbiased(const Matrix &a, const Matrix &b);

/// Per layout, the fraction of windows/doors with zero intersection volume
/// with every wall; averaged over layouts that have any window or door.
double floating_rate(const std::vector<BoxLayout> &layouts);

struct EvalReport {
  double fd_surrogate = 0.0;
  double kd_surrogate = 0.0;
  double floating_rate = 0.0;
  double mean_pairwise_iou = 0.0;
  std::size_t n_gen = 0;
  std::size_t n_ref = 0;

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json &doc);
  friend bool operator==(const EvalReport &, const EvalReport &) = default;
};

/// Baseline: 1..max_boxes boxes per layout with uniform real categories,
/// centers in U[0,1]^3 and per-axis sizes in U[0.01, 0.5].
std::vector<BoxLayout> random_layouts(std::size_t count, int max_boxes, std::uint64_t seed);

/// Layouts without real boxes are skipped for feature metrics (they still
/// count toward n_gen / n_ref). floating_rate and mean_pairwise_iou describe
/// `gen`.
EvalReport eval_report(const std::vector<BoxLayout> &gen, const std::vector<BoxLayout> &ref,
                       std::uint64_t seed = 0);

} // namespace blockforge
