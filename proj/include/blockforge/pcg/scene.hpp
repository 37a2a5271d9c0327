#pragma once

#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "blockforge/pcg/assets.hpp"
#include "blockforge/pcg/mesh.hpp"
#include "blockforge/rules/rule_layout.hpp"

namespace blockforge {

inline constexpr double kMinWallThickness = 0.05;
inline constexpr double kDefaultAlignTolerance = 0.02;

struct SceneNode {
  std::string id;
  std::string category;
  std::string parent;
  std::vector<std::string> children;
  bool floating = false;
  nlohmann::json style = nlohmann::json::object();
  std::string asset_id;
  int width_axis = 0;
  /// Rule box in meters.
  Box3 rule_box;
  /// Where the component is realized; equals rule_box unless a wall was
  /// thickened to the minimum or align_siblings moved it.
  Box3 placed_box;
  /// Solid cells left after carving (walls only).
  std::vector<Box3> solids;
  std::vector<TriangleMesh> meshes;
};

struct SceneGraph {
  RuleMeta meta;
  /// Sorted by id.
  std::vector<SceneNode> nodes;
  std::vector<std::string> warnings;

  const SceneNode *find(std::string_view id) const;
  SceneNode *find(std::string_view id);
  /// Vertical extent of all placed boxes.
  double building_height() const;
};

/// Builds every component in meters. Walls are thickened to the minimum
/// thickness and their attached children are carved out; each wall keeps
/// its own box, so overlapping walls are not cut against each other (use
/// merge_walls for a non-overlapping wall set). Other nodes retrieve and stretch an asset placed
/// at their rule box. A window or door too small for its frame is realized
/// as a plain pane with a warning. Errors name the failing component.
SceneGraph assemble(const RuleLayout &rules, const std::vector<AssetComponent> &db = default_asset_db());

/// Within each wall, windows whose bottoms form a cluster spanning at most
/// tolerance_fraction * building height snap to the cluster median; children
/// within the tolerance of the wall mid-plane are centered on it. Walls are
/// re-carved afterwards. Idempotent.
SceneGraph align_siblings(const SceneGraph &scene, double tolerance_fraction = kDefaultAlignTolerance);

/// Wavefront OBJ: per node (ids ascending) "g component_<id>", "usemtl",
/// "v x y z" with 6 decimals, then "f a b c" with relative (negative)
/// indices into the group's own vertices, so each group's bytes depend only
/// on that node.
std::string export_obj(const SceneGraph &scene);

/// {id: {category, material, color}} in id order.
nlohmann::ordered_json scene_manifest(const SceneGraph &scene);

struct ObjGroup {
  std::string name;
  std::string material;
  std::vector<Vec3> vertices;
  std::vector<Triangle> faces;  // resolved to 1-indexed, file-global
};

/// Reads back the subset of OBJ written by export_obj; positive and relative
/// face indices are both accepted. Throws ParseError.
std::vector<ObjGroup> parse_obj(std::string_view text);

} // namespace blockforge
