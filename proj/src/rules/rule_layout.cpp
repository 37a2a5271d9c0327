#include "blockforge/rules/rule_layout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>

#include "blockforge/core/error.hpp"
#include "blockforge/layout/ops.hpp"

namespace blockforge {

using nlohmann::json;

ComponentBox ComponentNode::box() const {
  ComponentBox b;
  b.center = center;
  b.size = size;
  const auto idx = CategoryTaxonomy::index_of(category);
  b.category = idx ? *idx : CategoryTaxonomy::kEmpty;
  return b;
}

const ComponentNode *RuleLayout::find(std::string_view id) const {
  auto it = std::lower_bound(components.begin(), components.end(), id,
                             [](const ComponentNode &n, std::string_view key) { return n.id < key; });
  return it != components.end() && it->id == id ? &*it : nullptr;
}

ComponentNode *RuleLayout::find(std::string_view id) {
  return const_cast<ComponentNode *>(std::as_const(*this).find(id));
}

TemplateLibrary::TemplateLibrary() {
  auto add = [this](const char *category, json defaults) {
    CategoryTemplate t;
    for (auto it = defaults.begin(); it != defaults.end(); ++it) t.required.push_back(it.key());
    t.defaults = std::move(defaults);
    templates_.emplace(category, std::move(t));
  };
  add("wall", {{"material", "plaster"}, {"color", "beige"}});
  add("window", {{"frame_width", 0.06},
                 {"muntin_cell", 0.6},
                 {"glass_material", "glass_clear"},
                 {"frame_material", "wood"},
                 {"color", "white"}});
  add("door", {{"frame_width", 0.08}, {"material", "wood"}, {"color", "brown"}});
  add("roof", {{"material", "tile"}, {"shape", "gable"}, {"color", "red"}});
  add("floor", {{"material", "concrete"}, {"color", "gray"}});
  add("stairs", {{"material", "concrete"}, {"step_height", 0.18}, {"color", "gray"}});
  add("column", {{"material", "stone"}, {"color", "white"}});
  add("balcony", {{"material", "concrete"}, {"color", "gray"}});
  add("chimney", {{"material", "brick"}, {"color", "red"}});
  add("railing", {{"material", "metal"}, {"bar_spacing", 0.12}, {"color", "black"}});
  add("garage", {{"material", "metal"}, {"color", "gray"}});
  add("awning", {{"material", "fabric"}, {"color", "green"}});
  add("decoration", {{"material", "stone"}, {"color", "white"}});
}

const CategoryTemplate &TemplateLibrary::at(std::string_view category) const {
  auto it = templates_.find(category);
  if (it == templates_.end()) throw Error(ErrorCode::UnknownCategory, "no template for '" + std::string(category) + "'");
  return it->second;
}

bool TemplateLibrary::contains(std::string_view category) const { return templates_.find(category) != templates_.end(); }

const TemplateLibrary &default_templates() {
  static const TemplateLibrary lib;
  return lib;
}

namespace {

std::string node_id(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "c%03zu", index);
  return buf;
}

bool attaches_to_wall(const std::string &category) {
  return category == "window" || category == "door" || category == "awning";
}

void sort_structure(RuleLayout &r) {
  std::sort(r.components.begin(), r.components.end(),
            [](const ComponentNode &a, const ComponentNode &b) { return a.id < b.id; });
  std::sort(r.roots.begin(), r.roots.end());
  for (auto &c : r.components) std::sort(c.children.begin(), c.children.end());
}

} // namespace

RuleLayout expand_to_rules(const BoxLayout &layout, const TemplateLibrary &templates, double world_scale) {
  if (!(world_scale > 0.0) || !std::isfinite(world_scale)) {
    throw Error(ErrorCode::InvalidArgument, "world_scale must be positive");
  }
  std::vector<ComponentBox> boxes;
  for (const auto &b : layout.boxes) {
    if (b.is_empty()) continue;
    if (!CategoryTaxonomy::is_real(b.category)) {
      throw Error(ErrorCode::UnknownCategory, "category index " + std::to_string(b.category));
    }
    boxes.push_back(b);
  }
  if (boxes.empty()) throw Error(ErrorCode::EmptyLayout, "layout '" + layout.id + "' has no real boxes");
  boxes = sorted_boxes(std::move(boxes));

  RuleLayout r;
  r.meta.prompt = layout.prompt;
  r.meta.style = layout.style;
  r.meta.world_scale = world_scale;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    ComponentNode n;
    n.id = node_id(i);
    n.category = CategoryTaxonomy::name_of(boxes[i].category);
    n.center = boxes[i].center;
    n.size = boxes[i].size;
    n.style = templates.at(n.category).defaults;
    r.roots.push_back(n.id);
    r.components.push_back(std::move(n));
  }
  sort_structure(r);
  return r;
}

RuleLayout infer_attachments(const RuleLayout &rules) {
  RuleLayout r = rules;
  sort_structure(r);
  for (auto &c : r.components) {
    c.children.clear();
    c.floating = false;
  }
  std::vector<ComponentNode *> walls;
  for (auto &c : r.components) {
    if (c.category == "wall") walls.push_back(&c);
  }
  std::set<std::string> attached;
  for (auto &c : r.components) {
    if (!attaches_to_wall(c.category)) continue;
    const ComponentBox cb = c.box();
    ComponentNode *best = nullptr;
    double best_vol = 0.0, best_dist = 0.0;
    for (ComponentNode *w : walls) {
      const ComponentBox wb = w->box();
      const double vol = intersection_volume(cb, wb);
      if (!(vol > 0.0)) continue;
      double dist = 0.0;
      for (std::size_t a = 0; a < 3; ++a) dist += (cb.center[a] - wb.center[a]) * (cb.center[a] - wb.center[a]);
      // Walls are visited in id order, so equal (volume, distance) keeps the lower id.
      if (!best || vol > best_vol || (vol == best_vol && dist < best_dist)) {
        best = w;
        best_vol = vol;
        best_dist = dist;
      }
    }
    if (best) {
      best->children.push_back(c.id);
      attached.insert(c.id);
    } else {
      c.floating = true;
    }
  }
  r.roots.clear();
  for (const auto &c : r.components) {
    if (!attached.count(c.id)) r.roots.push_back(c.id);
  }
  sort_structure(r);
  return r;
}

nlohmann::ordered_json rule_layout_to_json(const RuleLayout &rules) {
  RuleLayout r = rules;
  sort_structure(r);
  nlohmann::ordered_json doc;
  doc["meta"] = {{"prompt", r.meta.prompt}, {"style", r.meta.style}, {"world_scale", r.meta.world_scale}};
  doc["roots"] = r.roots;
  auto comps = nlohmann::ordered_json::array();
  for (const auto &c : r.components) {
    nlohmann::ordered_json n;
    n["id"] = c.id;
    n["category"] = c.category;
    n["center"] = c.center;
    n["size"] = c.size;
    n["style"] = nlohmann::ordered_json::parse(c.style.dump());
    n["children"] = c.children;
    n["floating"] = c.floating;
    comps.push_back(std::move(n));
  }
  doc["components"] = std::move(comps);
  return doc;
}

std::string serialize_rule_layout(const RuleLayout &rules) { return rule_layout_to_json(rules).dump(); }

namespace {

class Validator {
public:
  Validator(const json &doc, const TemplateLibrary &templates) : doc_(doc), templates_(templates) {}

  RuleValidation run() {
    RuleValidation out;
    RuleLayout r;
    if (!doc_.is_object()) {
      fail("$", "expected an object");
      out.errors = errors_;
      return out;
    }
    read_meta(r);
    read_roots(r);
    read_components(r);
    if (errors_.empty()) check_structure(r);
    if (errors_.empty()) {
      sort_structure(r);
      out.rules = std::move(r);
    }
    out.errors = errors_;
    return out;
  }

private:
  void fail(const std::string &path, const std::string &message) { errors_.push_back(path + ": " + message); }

  const json *field(const json &obj, const std::string &path, const char *key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      fail(path.empty() ? key : path + "." + key, "missing key");
      return nullptr;
    }
    return &*it;
  }

  static std::string join(const std::string &path, const char *key) { return path.empty() ? key : path + "." + key; }

  void read_meta(RuleLayout &r) {
    const json *meta = field(doc_, "", "meta");
    if (!meta) return;
    if (!meta->is_object()) {
      fail("meta", "expected an object");
      return;
    }
    if (const json *p = field(*meta, "meta", "prompt")) {
      if (p->is_string()) r.meta.prompt = p->get<std::string>();
      else fail("meta.prompt", "expected a string");
    }
    if (const json *s = field(*meta, "meta", "style")) {
      if (s->is_string()) r.meta.style = s->get<std::string>();
      else fail("meta.style", "expected a string");
    }
    if (const json *w = field(*meta, "meta", "world_scale")) {
      if (!w->is_number()) fail("meta.world_scale", "expected a number");
      else if (!(w->get<double>() > 0.0) || !std::isfinite(w->get<double>())) fail("meta.world_scale", "must be positive");
      else r.meta.world_scale = w->get<double>();
    }
  }

  void read_roots(RuleLayout &r) {
    const json *roots = field(doc_, "", "roots");
    if (!roots) return;
    if (!roots->is_array()) {
      fail("roots", "expected an array");
      return;
    }
    for (std::size_t i = 0; i < roots->size(); ++i) {
      const auto &v = (*roots)[i];
      if (v.is_string()) r.roots.push_back(v.get<std::string>());
      else fail("roots[" + std::to_string(i) + "]", "expected a string");
    }
  }

  bool read_vec3(const json &obj, const std::string &path, const char *key, Vec3 &out) {
    const json *v = field(obj, path, key);
    if (!v) return false;
    const std::string p = join(path, key);
    if (!v->is_array() || v->size() != 3) {
      fail(p, "expected an array of 3 numbers");
      return false;
    }
    for (std::size_t a = 0; a < 3; ++a) {
      if (!(*v)[a].is_number()) {
        fail(p + "[" + std::to_string(a) + "]", "expected a number");
        return false;
      }
      out[a] = (*v)[a].get<double>();
      if (!std::isfinite(out[a])) {
        fail(p + "[" + std::to_string(a) + "]", "must be finite");
        return false;
      }
    }
    return true;
  }

  void read_components(RuleLayout &r) {
    const json *comps = field(doc_, "", "components");
    if (!comps) return;
    if (!comps->is_array()) {
      fail("components", "expected an array");
      return;
    }
    constexpr double kSlack = 1e-9;
    for (std::size_t i = 0; i < comps->size(); ++i) {
      const std::string path = "components[" + std::to_string(i) + "]";
      const json &c = (*comps)[i];
      ComponentNode n;
      if (!c.is_object()) {
        fail(path, "expected an object");
        r.components.push_back(n);
        continue;
      }
      if (const json *id = field(c, path, "id")) {
        if (!id->is_string() || id->get<std::string>().empty()) fail(path + ".id", "expected a non-empty string");
        else n.id = id->get<std::string>();
      }
      bool known_category = false;
      if (const json *cat = field(c, path, "category")) {
        if (!cat->is_string()) fail(path + ".category", "expected a string");
        else {
          n.category = cat->get<std::string>();
          const auto idx = CategoryTaxonomy::index_of(n.category);
          if (!idx || !CategoryTaxonomy::is_real(*idx)) fail(path + ".category", "unknown category '" + n.category + "'");
          else known_category = true;
        }
      }
      if (read_vec3(c, path, "center", n.center)) {
        for (std::size_t a = 0; a < 3; ++a) {
          if (n.center[a] < -kSlack || n.center[a] > 1.0 + kSlack) {
            fail(path + ".center[" + std::to_string(a) + "]", "out of range [0, 1]");
          }
        }
      }
      if (read_vec3(c, path, "size", n.size)) {
        for (std::size_t a = 0; a < 3; ++a) {
          if (!(n.size[a] > 0.0) || n.size[a] > 1.0 + kSlack) {
            fail(path + ".size[" + std::to_string(a) + "]", "out of range (0, 1]");
          }
        }
      }
      if (const json *style = field(c, path, "style")) {
        if (!style->is_object()) fail(path + ".style", "expected an object");
        else {
          n.style = *style;
          if (known_category) check_style(*style, path + ".style", templates_.at(n.category));
        }
      }
      if (const json *children = field(c, path, "children")) {
        if (!children->is_array()) fail(path + ".children", "expected an array");
        else {
          for (std::size_t k = 0; k < children->size(); ++k) {
            const auto &v = (*children)[k];
            if (v.is_string()) n.children.push_back(v.get<std::string>());
            else fail(path + ".children[" + std::to_string(k) + "]", "expected a string");
          }
        }
      }
      if (auto it = c.find("floating"); it != c.end()) {
        if (!it->is_boolean()) fail(path + ".floating", "expected a boolean");
        else n.floating = it->get<bool>();
      }
      r.components.push_back(std::move(n));
    }
  }

  void check_style(const json &style, const std::string &path, const CategoryTemplate &t) {
    for (const auto &key : t.required) {
      auto it = style.find(key);
      const std::string p = path + "." + key;
      if (it == style.end()) {
        fail(p, "missing key");
        continue;
      }
      const json &expected = t.defaults.at(key);
      if (expected.is_number()) {
        if (!it->is_number()) fail(p, "expected a number");
        else if (!(it->get<double>() > 0.0) || !std::isfinite(it->get<double>())) fail(p, "must be positive");
      } else if (expected.is_string() && !it->is_string()) {
        fail(p, "expected a string");
      }
    }
  }

  void check_structure(const RuleLayout &r) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < r.components.size(); ++i) {
      auto [it, inserted] = index.emplace(r.components[i].id, i);
      if (!inserted) fail("components[" + std::to_string(i) + "].id", "duplicate id '" + r.components[i].id + "'");
    }
    if (!errors_.empty()) return;

    std::map<std::string, std::string> parent_of;
    for (std::size_t i = 0; i < r.components.size(); ++i) {
      const auto &c = r.components[i];
      for (std::size_t k = 0; k < c.children.size(); ++k) {
        const std::string path = "components[" + std::to_string(i) + "].children[" + std::to_string(k) + "]";
        const auto &child = c.children[k];
        if (!index.count(child)) {
          fail(path, "dangling id");
          continue;
        }
        if (child == c.id) {
          fail(path, "cycle: '" + child + "' is its own child");
          continue;
        }
        auto [it, inserted] = parent_of.emplace(child, c.id);
        if (!inserted) fail(path, "duplicate attachment of '" + child + "'");
      }
    }

    // Walk up from every node; revisiting a node means a cycle.
    std::set<std::string> reported;
    for (std::size_t i = 0; i < r.components.size(); ++i) {
      std::set<std::string> seen{r.components[i].id};
      std::string cur = r.components[i].id;
      while (parent_of.count(cur)) {
        cur = parent_of.at(cur);
        if (!seen.insert(cur).second) {
          if (reported.insert(cur).second) {
            fail("components[" + std::to_string(index.at(cur)) + "].children", "cycle through '" + cur + "'");
          }
          break;
        }
      }
    }

    std::set<std::string> root_set;
    for (std::size_t i = 0; i < r.roots.size(); ++i) {
      const std::string path = "roots[" + std::to_string(i) + "]";
      const auto &id = r.roots[i];
      if (!index.count(id)) fail(path, "dangling id");
      else if (!root_set.insert(id).second) fail(path, "duplicate root '" + id + "'");
      else if (parent_of.count(id)) fail(path, "'" + id + "' is also attached under '" + parent_of.at(id) + "'");
    }
    if (!errors_.empty()) return;

    for (std::size_t i = 0; i < r.components.size(); ++i) {
      const auto &c = r.components[i];
      if (!parent_of.count(c.id) && !root_set.count(c.id)) {
        fail("components[" + std::to_string(i) + "]", "'" + c.id + "' is neither a root nor attached");
      }
      if (parent_of.count(c.id) && !c.children.empty()) {
        fail("components[" + std::to_string(i) + "].children", "nested attachment below a child is not allowed");
      }
    }
  }

  const json &doc_;
  const TemplateLibrary &templates_;
  std::vector<std::string> errors_;
};

} // namespace

RuleValidation validate_rule_json(const nlohmann::json &document, const TemplateLibrary &templates) {
  return Validator(document, templates).run();
}

RuleValidation validate_rule_layout(std::string_view document, const TemplateLibrary &templates) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error &e) {
    RuleValidation out;
    out.errors.push_back(std::string("$: invalid JSON: ") + e.what());
    return out;
  }
  return validate_rule_json(doc, templates);
}

} // namespace blockforge
