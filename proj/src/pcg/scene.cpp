#include "blockforge/pcg/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

#include "blockforge/core/error.hpp"
#include "blockforge/pcg/csg.hpp"

namespace blockforge {

const SceneNode *SceneGraph::find(std::string_view id) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), id,
                             [](const SceneNode &n, std::string_view key) { return n.id < key; });
  return it != nodes.end() && it->id == id ? &*it : nullptr;
}

SceneNode *SceneGraph::find(std::string_view id) { return const_cast<SceneNode *>(std::as_const(*this).find(id)); }

double SceneGraph::building_height() const {
  if (nodes.empty()) return 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto &n : nodes) {
    lo = std::min(lo, n.placed_box.lo[2]);
    hi = std::max(hi, n.placed_box.hi[2]);
  }
  return hi - lo;
}

namespace {

int long_horizontal_axis(const Box3 &b) {
  const auto s = b.size();
  return s[1] > s[0] ? 1 : 0;
}

std::vector<std::string> style_tags(const RuleMeta &meta, const nlohmann::json &style) {
  std::vector<std::string> tags;
  if (!meta.style.empty()) tags.push_back(meta.style);
  for (auto it = style.begin(); it != style.end(); ++it) {
    if (it->is_string()) tags.push_back(it->get<std::string>());
  }
  return tags;
}

void realize_wall(SceneGraph &scene, SceneNode &wall) {
  std::vector<Box3> cut;
  for (const auto &cid : wall.children) {
    const SceneNode *child = scene.find(cid);
    if (child) cut.push_back(child->placed_box);
  }
  wall.solids = carve_opening(wall.placed_box, cut);
  wall.meshes.clear();
  for (const auto &s : wall.solids) wall.meshes.push_back(box_mesh(s));
}

void place(SceneNode &node, std::vector<TriangleMesh> meshes) {
  const Vec3 c = node.placed_box.center();
  for (auto &m : meshes) m.translate(c);
  node.meshes = std::move(meshes);
}

[[noreturn]] void rethrow_for(const std::string &id, const Error &e) {
  throw Error(e.code(), "component " + id + ": " + std::string(e.what()));
}

} // namespace

SceneGraph assemble(const RuleLayout &rules, const std::vector<AssetComponent> &db) {
  SceneGraph scene;
  scene.meta = rules.meta;
  const double k = rules.meta.world_scale;
  for (const auto &c : rules.components) {
    SceneNode n;
    n.id = c.id;
    n.category = c.category;
    n.children = c.children;
    n.floating = c.floating;
    n.style = c.style;
    n.rule_box = Box3::from_center_size({c.center[0] * k, c.center[1] * k, c.center[2] * k},
                                        {c.size[0] * k, c.size[1] * k, c.size[2] * k});
    n.placed_box = n.rule_box;
    scene.nodes.push_back(std::move(n));
  }
  std::sort(scene.nodes.begin(), scene.nodes.end(), [](const SceneNode &a, const SceneNode &b) { return a.id < b.id; });
  for (const auto &n : scene.nodes) {
    for (const auto &cid : n.children) {
      if (SceneNode *child = scene.find(cid)) child->parent = n.id;
    }
  }

  for (auto &n : scene.nodes) {
    if (n.category != "wall") continue;
    n.asset_id = "wall_prism";
    n.width_axis = long_horizontal_axis(n.rule_box);
    for (std::size_t a = 0; a < 3; ++a) {
      const double t = n.placed_box.hi[a] - n.placed_box.lo[a];
      if (t < kMinWallThickness) {
        const double grow = 0.5 * (kMinWallThickness - t);
        n.placed_box.lo[a] -= grow;
        n.placed_box.hi[a] += grow;
        scene.warnings.push_back("component " + n.id + ": wall thickened to " + std::to_string(kMinWallThickness) + " m");
      }
    }
  }
  for (auto &n : scene.nodes) {
    if (n.category != "wall") continue;
    try {
      realize_wall(scene, n);
    } catch (const Error &e) {
      rethrow_for(n.id, e);
    }
  }

  for (auto &n : scene.nodes) {
    if (n.category == "wall") continue;
    const SceneNode *parent = n.parent.empty() ? nullptr : scene.find(n.parent);
    n.width_axis = long_horizontal_axis(parent ? parent->placed_box : n.placed_box);
    try {
      const Vec3 size = n.placed_box.size();
      const auto &asset = retrieve_component(db, n.category, style_tags(scene.meta, n.style),
                                             target_ratio(size, n.width_axis));
      n.asset_id = asset.id;
      std::vector<TriangleMesh> meshes;
      try {
        meshes = stretch_component(asset, size, n.style, n.width_axis);
      } catch (const Error &e) {
        if (e.code() != ErrorCode::FrameTooThick) throw;
        scene.warnings.push_back("component " + n.id + ": " + e.what() + "; realized as a plain pane");
        meshes = {box_mesh(Box3::from_center_size({0.0, 0.0, 0.0}, size))};
      }
      place(n, std::move(meshes));
    } catch (const Error &e) {
      rethrow_for(n.id, e);
    }
  }
  return scene;
}

SceneGraph align_siblings(const SceneGraph &scene, double tolerance_fraction) {
  SceneGraph out = scene;
  const double tol = tolerance_fraction * out.building_height();
  auto move = [](SceneNode &n, const Vec3 &d) {
    for (std::size_t a = 0; a < 3; ++a) {
      n.placed_box.lo[a] += d[a];
      n.placed_box.hi[a] += d[a];
    }
    for (auto &m : n.meshes) m.translate(d);
  };

  for (auto &wall : out.nodes) {
    if (wall.category != "wall" || wall.children.empty()) continue;

    std::vector<SceneNode *> windows;
    for (const auto &cid : wall.children) {
      SceneNode *c = out.find(cid);
      if (c && c->category == "window") windows.push_back(c);
    }
    std::sort(windows.begin(), windows.end(), [](const SceneNode *a, const SceneNode *b) {
      return a->placed_box.lo[2] != b->placed_box.lo[2] ? a->placed_box.lo[2] < b->placed_box.lo[2] : a->id < b->id;
    });
    // Single-linkage clusters on gaps > tol; only tight clusters snap.
    std::size_t i = 0;
    while (i < windows.size()) {
      std::size_t j = i + 1;
      while (j < windows.size() && windows[j]->placed_box.lo[2] - windows[j - 1]->placed_box.lo[2] <= tol) ++j;
      const double span = windows[j - 1]->placed_box.lo[2] - windows[i]->placed_box.lo[2];
      if (j - i >= 2 && span <= tol && span > 0.0) {
        const std::size_t n = j - i;
        const double median = n % 2 == 1 ? windows[i + n / 2]->placed_box.lo[2]
                                         : 0.5 * (windows[i + n / 2 - 1]->placed_box.lo[2] + windows[i + n / 2]->placed_box.lo[2]);
        for (std::size_t k = i; k < j; ++k) {
          const double dz = median - windows[k]->placed_box.lo[2];
          Box3 trial = windows[k]->placed_box;
          trial.lo[2] += dz;
          trial.hi[2] += dz;
          if (dz != 0.0 && overlap_volume(trial, wall.placed_box) > 0.0) {
            move(*windows[k], {0.0, 0.0, dz});
          }
        }
      }
      i = j;
    }

    const auto depth = static_cast<std::size_t>(1 - wall.width_axis);
    const double mid = 0.5 * (wall.placed_box.lo[depth] + wall.placed_box.hi[depth]);
    for (const auto &cid : wall.children) {
      SceneNode *c = out.find(cid);
      if (!c) continue;
      const double off = mid - 0.5 * (c->placed_box.lo[depth] + c->placed_box.hi[depth]);
      if (off == 0.0 || std::abs(off) > tol) continue;
      Vec3 d{0.0, 0.0, 0.0};
      d[depth] = off;
      move(*c, d);
    }
  }
  for (auto &wall : out.nodes) {
    if (wall.category == "wall") realize_wall(out, wall);
  }
  return out;
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s = buf;
  if (s == "-0.000000") s = "0.000000";
  return s;
}

std::string style_text(const nlohmann::json &style, const char *key) {
  auto it = style.find(key);
  if (it == style.end() || !it->is_string()) return "";
  return it->get<std::string>();
}

std::string material_of(const SceneNode &n) {
  std::string m = style_text(n.style, "material");
  if (m.empty()) m = style_text(n.style, "frame_material");
  if (m.empty()) m = "default";
  for (auto &ch : m) {
    if (std::isspace(static_cast<unsigned char>(ch))) ch = '_';
  }
  return m;
}

} // namespace

std::string export_obj(const SceneGraph &scene) {
  std::string out;
  for (const auto &n : scene.nodes) {
    out += "g component_" + n.id + "\n";
    out += "usemtl " + material_of(n) + "\n";
    int count = 0;
    for (const auto &m : n.meshes) {
      for (const auto &v : m.vertices) out += "v " + fixed6(v[0]) + " " + fixed6(v[1]) + " " + fixed6(v[2]) + "\n";
      count += static_cast<int>(m.vertices.size());
    }
    // Relative indices: -1 is the group's last vertex.
    int base = -count;
    for (const auto &m : n.meshes) {
      for (const auto &t : m.triangles) {
        out += "f " + std::to_string(base + t[0]) + " " + std::to_string(base + t[1]) + " " + std::to_string(base + t[2]) + "\n";
      }
      base += static_cast<int>(m.vertices.size());
    }
  }
  return out;
}

nlohmann::ordered_json scene_manifest(const SceneGraph &scene) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto &n : scene.nodes) {
    j[n.id] = {{"category", n.category}, {"material", material_of(n)}, {"color", style_text(n.style, "color")}};
  }
  return j;
}

std::vector<ObjGroup> parse_obj(std::string_view text) {
  std::vector<ObjGroup> groups;
  std::size_t total = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    auto bad = [&](const std::string &why) {
      return Error(ErrorCode::ParseError, "obj line " + std::to_string(line_no) + ": " + why);
    };
    if (tag == "g") {
      ObjGroup g;
      ls >> g.name;
      groups.push_back(std::move(g));
    } else if (tag == "usemtl") {
      if (groups.empty()) throw bad("usemtl before any group");
      ls >> groups.back().material;
    } else if (tag == "v") {
      if (groups.empty()) throw bad("vertex before any group");
      Vec3 v;
      if (!(ls >> v[0] >> v[1] >> v[2])) throw bad("malformed vertex");
      groups.back().vertices.push_back(v);
      ++total;
    } else if (tag == "f") {
      if (groups.empty()) throw bad("face before any group");
      Triangle t;
      if (!(ls >> t[0] >> t[1] >> t[2])) throw bad("malformed face");
      for (int &idx : t) {
        if (idx < 0) idx += static_cast<int>(total) + 1;
        if (idx < 1 || static_cast<std::size_t>(idx) > total) throw bad("face index out of range");
      }
      groups.back().faces.push_back(t);
    } else {
      throw bad("unsupported statement '" + tag + "'");
    }
  }
  return groups;
}

} // namespace blockforge
