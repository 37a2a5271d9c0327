#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "blockforge/layout/box.hpp"
#include "blockforge/pcg/scene.hpp"
#include "blockforge/rules/oracle.hpp"
#include "blockforge/rules/rule_layout.hpp"

namespace blockforge {

struct ExpandResult {
  RuleLayout rules;
  std::vector<std::string> warnings;
};

/// Template expansion, attachment inference and style resolution. An empty
/// prompt falls back to the layout's own prompt.
ExpandResult expand_layout(const BoxLayout &layout, const std::string &prompt, StyleOracle &oracle,
                           double world_scale = kDefaultWorldScale);

struct BuildResult {
  SceneGraph scene;
  std::string obj;
  nlohmann::ordered_json manifest;
  std::vector<std::string> warnings;
  /// FNV-1a of the OBJ bytes, hex.
  std::string digest;
};

/// assemble, optional align_siblings, then OBJ export.
BuildResult build_rules(const RuleLayout &rules, std::optional<double> align_tolerance = std::nullopt);

std::string fnv1a_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);

} // namespace blockforge
