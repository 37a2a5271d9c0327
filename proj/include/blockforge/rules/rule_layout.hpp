#pragma once

#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "blockforge/layout/box.hpp"

namespace blockforge {

inline constexpr double kDefaultWorldScale = 12.0;

/// One component of a rule-based layout. Geometry stays in normalized units.
struct ComponentNode {
  std::string id;
  std::string category;
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 size{0.0, 0.0, 0.0};
  nlohmann::json style = nlohmann::json::object();
  std::vector<std::string> children;
  bool floating = false;

  ComponentBox box() const;

  friend bool operator==(const ComponentNode &, const ComponentNode &) = default;
};

struct RuleMeta {
  std::string prompt;
  std::string style;
  double world_scale = kDefaultWorldScale;

  friend bool operator==(const RuleMeta &, const RuleMeta &) = default;
};

/// Two-level hierarchy: roots and the children of walls. Components are kept
/// sorted by id, roots and children lists sorted as well.
struct RuleLayout {
  RuleMeta meta;
  std::vector<ComponentNode> components;
  std::vector<std::string> roots;

  const ComponentNode *find(std::string_view id) const;
  ComponentNode *find(std::string_view id);

  friend bool operator==(const RuleLayout &, const RuleLayout &) = default;
};

struct CategoryTemplate {
  nlohmann::json defaults;
  std::vector<std::string> required;
};

/// Default style object and required keys per category.
class TemplateLibrary {
public:
  TemplateLibrary();

  const CategoryTemplate &at(std::string_view category) const;
  bool contains(std::string_view category) const;

private:
  std::map<std::string, CategoryTemplate, std::less<>> templates_;
};

const TemplateLibrary &default_templates();

/// One node per non-empty box with a copy of its category template; ids
/// "c000", "c001", ... follow (category, center, size) order.
/// Throws EmptyLayout, UnknownCategory.
RuleLayout expand_to_rules(const BoxLayout &layout, const TemplateLibrary &templates = default_templates(),
                           double world_scale = kDefaultWorldScale);

/// Windows, doors and awnings become children of the wall they overlap with
/// the largest intersection volume (ties: closer center, then lower id).
/// Those touching no wall stay at the root flagged as floating. Existing
/// attachments are discarded first.
RuleLayout infer_attachments(const RuleLayout &rules);

/// Canonical JSON text: meta, roots, components sorted by id.
std::string serialize_rule_layout(const RuleLayout &rules);
nlohmann::ordered_json rule_layout_to_json(const RuleLayout &rules);

struct RuleValidation {
  std::optional<RuleLayout> rules;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

/// Full schema check; every problem is reported as "<json path>: <message>".
RuleValidation validate_rule_layout(std::string_view document,
                                    const TemplateLibrary &templates = default_templates());
RuleValidation validate_rule_json(const nlohmann::json &document,
                                  const TemplateLibrary &templates = default_templates());

} // namespace blockforge
