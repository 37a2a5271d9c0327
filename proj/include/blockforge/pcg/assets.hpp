#pragma once

#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "blockforge/pcg/mesh.hpp"

namespace blockforge {

enum class AssetKind {
  Block,
  Column,
  FlatRoof,
  GableRoof,
  HipRoof,
  GridWindow,
  PictureWindow,
  PanelDoor,
  DoubleDoor,
  Stairs,
  Railing,
  Chimney,
};

/// A parametric asset. `base_ratio` is (width, height, depth) scaled so the
/// largest entry is 1; width runs along the asset's horizontal long axis.
struct AssetComponent {
  std::string id;
  std::string category;
  std::vector<std::string> tags;
  Vec3 base_ratio{1.0, 1.0, 1.0};
  AssetKind kind = AssetKind::Block;

  /// Composite assets are rebuilt at the target size; the rest are scaled.
  bool composite() const;
};

/// The built-in library of parametric assets, sorted by id.
const std::vector<AssetComponent> &default_asset_db();

/// (width, height, depth) of a world-space size given the width axis
/// (0 = x, 1 = y), normalized so the largest entry is 1.
Vec3 target_ratio(const Vec3 &size, int width_axis);

/// Category filter, then style-tag filter (falling back to every asset of
/// the category when no tags intersect), then the smallest Euclidean
/// distance between log ratios, ties by id. Throws NoAssetForCategory.
const AssetComponent &retrieve_component(const std::vector<AssetComponent> &db, const std::string &category,
                                         const std::vector<std::string> &style_tags, const Vec3 &target_ratio);

/// Interior vertical / horizontal muntin bars: round-half-up of
/// extent / cell, minus one, floored at zero.
std::pair<int, int> muntin_counts(double width_m, double height_m, double cell_target_m);

/// The asset's base mesh list at its base ratio, centered at the origin with
/// width along x.
std::vector<TriangleMesh> base_meshes(const AssetComponent &asset);

/// Meshes realizing the asset in a box of `target_size` (meters, world axes)
/// centered at the origin. `width_axis` (0 = x, 1 = y, -1 = longer
/// horizontal axis) orients the asset. Windows: four frame prisms of fixed
/// thickness, muntin bars, one glass pane. Doors: two jambs, a head, leaves.
/// Non-composite assets scale the base meshes per axis. Throws FrameTooThick
/// when 2 * frame_width >= min(width, height).
std::vector<TriangleMesh> stretch_component(const AssetComponent &asset, const Vec3 &target_size,
                                            const nlohmann::json &style, int width_axis = -1);

} // namespace blockforge
