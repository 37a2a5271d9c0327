#include <doctest.h>

#include <cmath>
#include <set>

#include "blockforge/core/error.hpp"
#include "blockforge/layout/ops.hpp"
#include "blockforge/pcg/assets.hpp"
#include "blockforge/pcg/csg.hpp"
#include "blockforge/pcg/mesh.hpp"
#include "blockforge/pcg/scene.hpp"
#include "blockforge/rules/rule_layout.hpp"
#include "blockforge/synth/synth.hpp"
#include "oracles.hpp"

using namespace blockforge;
using nlohmann::json;

namespace {

Box3 bx(Vec3 lo, Vec3 hi) { return Box3{lo, hi}; }

double total_volume(const std::vector<Box3> &boxes) {
  double v = 0.0;
  for (const auto &b : boxes) v += b.volume();
  return v;
}

bool pairwise_disjoint(const std::vector<Box3> &boxes) {
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (overlap_volume(boxes[i], boxes[j]) > 1e-12) return false;
    }
  }
  return true;
}

std::vector<oracle::AxisBox> axis(const std::vector<Box3> &boxes) {
  std::vector<oracle::AxisBox> out;
  for (const auto &b : boxes) out.push_back({b.lo, b.hi});
  return out;
}

/// Wall volume minus the union of its intersections with the holes.
double inclusion_exclusion(const Box3 &wall, const std::vector<Box3> &holes) {
  double removed = 0.0;
  const std::size_t n = holes.size();
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    Box3 b = wall;
    int bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask >> i & 1)) continue;
      ++bits;
      for (std::size_t a = 0; a < 3; ++a) {
        b.lo[a] = std::max(b.lo[a], holes[i].lo[a]);
        b.hi[a] = std::min(b.hi[a], holes[i].hi[a]);
      }
    }
    double v = 1.0;
    for (std::size_t a = 0; a < 3; ++a) v *= std::max(0.0, b.hi[a] - b.lo[a]);
    removed += (bits % 2 ? 1.0 : -1.0) * v;
  }
  return wall.volume() - removed;
}

Box3 union_bounds(const std::vector<TriangleMesh> &meshes) {
  Box3 b = meshes.front().bounds();
  for (const auto &m : meshes) {
    const Box3 mb = m.bounds();
    for (std::size_t a = 0; a < 3; ++a) {
      b.lo[a] = std::min(b.lo[a], mb.lo[a]);
      b.hi[a] = std::max(b.hi[a], mb.hi[a]);
    }
  }
  return b;
}

bool near_box(const Box3 &a, const Box3 &b, double tol) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (std::abs(a.lo[i] - b.lo[i]) > tol || std::abs(a.hi[i] - b.hi[i]) > tol) return false;
  }
  return true;
}

ComponentBox cbox(Vec3 c, Vec3 s, int cat) {
  ComponentBox b;
  b.center = c;
  b.size = s;
  b.category = cat;
  return b;
}

/// Twelve-component demo house: four abutting walls, four windows, a door,
/// a floor slab, a roof and a chimney.
BoxLayout demo_building() {
  BoxLayout l;
  l.id = "demo";
  l.prompt = "a one-story brick house with a chimney";
  l.boxes = {
      cbox({0.5, 0.15, 0.2}, {0.8, 0.02, 0.3}, CategoryTaxonomy::kWall),
      cbox({0.5, 0.85, 0.2}, {0.8, 0.02, 0.3}, CategoryTaxonomy::kWall),
      cbox({0.11, 0.5, 0.2}, {0.02, 0.68, 0.3}, CategoryTaxonomy::kWall),
      cbox({0.89, 0.5, 0.2}, {0.02, 0.68, 0.3}, CategoryTaxonomy::kWall),
      cbox({0.3, 0.15, 0.22}, {0.12, 0.03, 0.1}, CategoryTaxonomy::kWindow),
      cbox({0.7, 0.15, 0.22}, {0.12, 0.03, 0.1}, CategoryTaxonomy::kWindow),
      cbox({0.5, 0.85, 0.22}, {0.15, 0.03, 0.1}, CategoryTaxonomy::kWindow),
      cbox({0.11, 0.5, 0.22}, {0.03, 0.1, 0.1}, CategoryTaxonomy::kWindow),
      cbox({0.5, 0.15, 0.13}, {0.08, 0.03, 0.16}, CategoryTaxonomy::kDoor),
      cbox({0.5, 0.5, 0.04}, {0.8, 0.72, 0.02}, CategoryTaxonomy::kFloor),
      cbox({0.5, 0.5, 0.42}, {0.84, 0.74, 0.14}, CategoryTaxonomy::kRoof),
      cbox({0.75, 0.7, 0.45}, {0.05, 0.05, 0.14}, CategoryTaxonomy::kChimney),
  };
  return l;
}

RuleLayout rules_of(const BoxLayout &l) { return infer_attachments(expand_to_rules(l)); }

/// Realized bounds per OBJ group from the exported text.
std::map<std::string, Box3> obj_bounds(const std::string &obj) {
  std::map<std::string, Box3> out;
  for (const auto &g : parse_obj(obj)) {
    REQUIRE_FALSE(g.vertices.empty());
    TriangleMesh m;
    m.vertices = g.vertices;
    out[g.name] = m.bounds();
  }
  return out;
}

} // namespace

// Test cases named "geometry: ..." form the geometry correctness suite.

TEST_CASE("geometry: box and prism meshes are closed and outward") {
  const auto cube = box_mesh(bx({0, 0, 0}, {1, 1, 1}));
  CHECK(cube.vertices.size() == 8);
  CHECK(cube.triangles.size() == 12);
  CHECK(cube.is_watertight());
  CHECK(cube.signed_volume() == doctest::Approx(1.0));
  for (int ax = 0; ax < 3; ++ax) {
    const auto p = extruded_prism({{0, 0}, {2, 0}, {0, 1}}, ax, 0.0, 3.0);
    CHECK(p.is_watertight());
    CHECK(p.signed_volume() == doctest::Approx(3.0));
    const auto cw = extruded_prism({{0, 0}, {0, 1}, {2, 0}}, ax, 0.0, 3.0);
    CHECK(cw.signed_volume() == doctest::Approx(3.0));
  }
  const auto gable = gable_roof_mesh(bx({0, 0, 0}, {4, 2, 1}));
  CHECK(gable.is_watertight());
  CHECK(gable.signed_volume() == doctest::Approx(4.0));
  CHECK(near_box(gable.bounds(), bx({0, 0, 0}, {4, 2, 1}), 1e-12));
  for (const auto &b : {bx({0, 0, 0}, {4, 2, 1}), bx({0, 0, 0}, {2, 4, 1}), bx({0, 0, 0}, {2, 2, 1})}) {
    const auto hip = hip_roof_mesh(b);
    CHECK(hip.is_watertight());
    CHECK(hip.signed_volume() > 0.0);
    CHECK(near_box(hip.bounds(), b, 1e-12));
  }
  // Hip roof 4x2x1: ridge of length 2, volume = prism part + pyramid part.
  CHECK(hip_roof_mesh(bx({0, 0, 0}, {4, 2, 1})).signed_volume() == doctest::Approx(2.0 * 1.0 + 4.0 / 3.0));
  CHECK(hip_roof_mesh(bx({0, 0, 0}, {2, 2, 1})).signed_volume() == doctest::Approx(4.0 / 3.0));

  auto broken = cube;
  broken.triangles.pop_back();
  CHECK_FALSE(broken.is_watertight());
  auto flipped = cube;
  std::swap(flipped.triangles[0][1], flipped.triangles[0][2]);
  CHECK_FALSE(flipped.is_watertight());
}

TEST_CASE("geometry: retrieval by style filter and ratio") {
  const auto &db = default_asset_db();
  CHECK(std::is_sorted(db.begin(), db.end(), [](const auto &a, const auto &b) { return a.id < b.id; }));
  for (auto name : CategoryTaxonomy::names()) {
    CHECK_NOTHROW(retrieve_component(db, std::string(name), {}, {1, 1, 1}));
  }
  for (const auto &a : db) CHECK(std::max({a.base_ratio[0], a.base_ratio[1], a.base_ratio[2]}) == 1.0);

  CHECK(retrieve_component(db, "window", {"modern"}, {1, 1, 0.05}).id == "window_picture");
  CHECK(retrieve_component(db, "window", {"medieval"}, {1, 1, 0.05}).id == "window_grid");

  std::vector<AssetComponent> two{{"a_tall", "window", {"x"}, {0.5, 1.0, 0.05}, AssetKind::GridWindow},
                                  {"b_square", "window", {"x"}, {1.0, 1.0, 0.1}, AssetKind::GridWindow}};
  CHECK(retrieve_component(two, "window", {"x"}, {1.0, 1.0, 0.1}).id == "b_square");
  CHECK(retrieve_component(two, "window", {"x"}, {0.5, 1.0, 0.05}).id == "a_tall");
  // Identical ratios tie on id.
  std::vector<AssetComponent> tied{{"z", "door", {}, {1, 1, 1}, AssetKind::PanelDoor},
                                   {"a", "door", {}, {1, 1, 1}, AssetKind::PanelDoor}};
  CHECK(retrieve_component(tied, "door", {}, {1, 1, 1}).id == "a");
  CHECK_THROWS_WITH_AS(retrieve_component(two, "roof", {}, {1, 1, 1}), doctest::Contains("NoAssetForCategory"), Error);

  // No tag overlap: the whole category pool is scored by brute force.
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 want{rng.uniform(0.05, 1), rng.uniform(0.05, 1), rng.uniform(0.02, 1)};
    const double m = std::max({want[0], want[1], want[2]});
    const Vec3 norm{want[0] / m, want[1] / m, want[2] / m};
    for (const char *cat : {"window", "door", "roof", "column"}) {
      std::string best;
      double best_score = 1e300;
      for (const auto &a : db) {
        if (a.category != cat) continue;
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += std::pow(std::log(a.base_ratio[k]) - std::log(norm[k]), 2);
        s = std::sqrt(s);
        if (s < best_score - 1e-12 || (std::abs(s - best_score) <= 1e-12 && a.id < best)) {
          best_score = s;
          best = a.id;
        }
      }
      CHECK(retrieve_component(db, cat, {"no_such_tag"}, want).id == best);
    }
  }
  CHECK(target_ratio({2.0, 0.5, 4.0}, 0) == Vec3{0.5, 1.0, 0.125});
  CHECK(target_ratio({0.5, 2.0, 4.0}, 1) == Vec3{0.5, 1.0, 0.125});
}

TEST_CASE("geometry: carving conserves volume") {
  const Box3 wall = bx({0, 0, 0}, {4, 0.2, 3});
  CHECK(carve_opening(wall, {}) == std::vector<Box3>{wall});
  const auto one = carve_opening(wall, {bx({1.5, 0, 1}, {2.5, 0.2, 2})});
  CHECK(total_volume(one) == doctest::Approx(2.2).epsilon(1e-12));
  CHECK(std::abs(total_volume(one) - 2.2) < 1e-9);
  CHECK(pairwise_disjoint(one));
  CHECK_FALSE(point_in_solids(one, {2, 0.1, 1.5}));
  CHECK(point_in_solids(one, {0.5, 0.1, 1.5}));
  CHECK(std::is_sorted(one.begin(), one.end()));
  CHECK(one.size() == 4);

  // Two overlapping openings, one poking out of the wall.
  const std::vector<Box3> holes{bx({0.5, -0.1, 0.8}, {1.7, 0.3, 1.9}), bx({1.2, 0.05, 1.5}, {2.6, 0.15, 2.4})};
  const auto two = carve_opening(wall, holes);
  CHECK(pairwise_disjoint(two));
  const double exact = wall.volume() - (1.2 * 0.2 * 1.1 + 1.4 * 0.1 * 0.9 - 0.5 * 0.1 * 0.4);
  CHECK(std::abs(total_volume(two) - exact) < 1e-9);
  const double vox = oracle::voxel_volume(axis({wall}), axis(holes), wall.lo, wall.hi, 1e-3);
  CHECK(std::abs(total_volume(two) - vox) <= 1e-3 * vox);

  CHECK_THROWS_WITH_AS(carve_opening(wall, {bx({5, 0, 0}, {6, 0.2, 1})}), doctest::Contains("OpeningOutsideWall"),
                       Error);
  CHECK_THROWS_AS(carve_opening(wall, {bx({4, 0, 0}, {5, 0.2, 1})}), Error);
}

TEST_CASE("geometry: aabb_iou agrees with Monte Carlo") {
  Rng rng(40);
  for (int i = 0; i < 200; ++i) {
    const auto a = oracle::random_box(rng), b = oracle::random_box(rng);
    CHECK(std::abs(aabb_iou(a, b) - oracle::monte_carlo_iou(a, b, 100000, rng)) < 1e-2);
  }
}

TEST_CASE("geometry: random carvings and merges match the voxel oracle") {
  // Coordinates on the millimeter grid so voxel centers never sit on a face.
  Rng rng(42);
  const auto mm = [&](double lo, double hi) { return std::round(rng.uniform(lo, hi) * 1000.0) / 1000.0; };
  for (int trial = 0; trial < 25; ++trial) {
    const Box3 wall = bx({0, 0, 0}, {mm(1, 3), mm(0.1, 0.3), mm(1, 3)});
    std::vector<Box3> holes;
    const int n = rng.uniform_int(1, 4);
    for (int i = 0; i < n; ++i) {
      Vec3 lo, hi;
      for (std::size_t a = 0; a < 3; ++a) {
        const double ext = wall.hi[a];
        lo[a] = mm(-0.05 * ext, 0.8 * ext);
        hi[a] = lo[a] + mm(0.1 * ext, 0.6 * ext);
      }
      holes.push_back(bx(lo, hi));
    }
    const auto cells = carve_opening(wall, holes);
    CHECK(pairwise_disjoint(cells));
    CHECK(std::abs(total_volume(cells) - inclusion_exclusion(wall, holes)) < 1e-9);
    const double vox = oracle::voxel_volume(axis({wall}), axis(holes), wall.lo, wall.hi, 1e-3);
    CHECK(std::abs(total_volume(cells) - vox) <= 1e-3 * vox);
    for (const auto &c : cells) CHECK(box_mesh(c).is_watertight());
  }
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<Box3> walls;
    const int n = rng.uniform_int(2, 4);
    const double height = mm(2, 3);
    for (int i = 0; i < n; ++i) {
      const bool along_x = rng.bernoulli(0.5);
      const double x0 = mm(0, 2), y0 = mm(0, 2), len = mm(0.5, 2), t = mm(0.1, 0.3);
      walls.push_back(along_x ? bx({x0, y0, 0}, {x0 + len, y0 + t, height}) : bx({x0, y0, 0}, {x0 + t, y0 + len, height}));
    }
    if (rng.bernoulli(0.5)) {
      // A collinear extension so the union path is exercised too.
      Box3 ext = walls[0];
      const int ax = ext.size()[0] > ext.size()[1] ? 0 : 1;
      const double shift = mm(0.1, 0.9) * ext.size()[ax];
      ext.lo[ax] += shift;
      ext.hi[ax] += shift;
      walls.push_back(ext);
    }
    const auto merged = merge_walls(walls);
    CHECK(pairwise_disjoint(merged));
    const double vox = oracle::voxel_volume(axis(walls), {}, {0, 0, 0}, {5, 5, height}, 1e-3);
    CHECK(std::abs(total_volume(merged) - vox) <= 1e-3 * vox);
    for (const auto &w : merged) CHECK(box_mesh(w).is_watertight());
  }
}

TEST_CASE("geometry: wall merging") {
  const auto merged = merge_walls({bx({0, 0, 0}, {2, 0.2, 3}), bx({1.5, 0, 0}, {4, 0.2, 3})});
  REQUIRE(merged.size() == 1);
  CHECK(near_box(merged[0], bx({0, 0, 0}, {4, 0.2, 3}), 1e-12));
  const auto abut = merge_walls({bx({0, 0, 0}, {2, 0.2, 3}), bx({2, 0, 0}, {4, 0.2, 3})});
  CHECK(abut.size() == 1);

  const std::vector<Box3> disjoint{bx({0, 0, 0}, {1, 0.2, 3}), bx({2, 1, 0}, {3, 1.2, 3})};
  CHECK(merge_walls(disjoint) == disjoint);

  const std::vector<Box3> perp{bx({0, 0, 0}, {4, 0.2, 3}), bx({0, 0, 0}, {0.2, 3, 3}), bx({3.9, -0.5, 0}, {4.1, 2, 3})};
  const auto m = merge_walls(perp);
  CHECK(pairwise_disjoint(m));
  const double vox = oracle::voxel_volume(axis(perp), {}, {-0.1, -0.6, 0}, {4.2, 3.1, 3}, 1e-3);
  CHECK(std::abs(total_volume(m) - vox) <= 1e-3 * vox);
  for (const auto &p : {Vec3{1, 0.1, 1}, Vec3{0.1, 2, 1}, Vec3{4.0, 1.5, 2}, Vec3{0.1, 0.1, 0.1}}) {
    CHECK(point_in_solids(m, p));
  }
}

TEST_CASE("geometry: muntin counts") {
  CHECK(muntin_counts(1.2, 1.8, 0.6) == std::pair{1, 2});
  CHECK(muntin_counts(0.5, 0.5, 0.6) == std::pair{0, 0});
  CHECK(muntin_counts(0.9, 0.9, 0.6) == std::pair{1, 1});
  CHECK(muntin_counts(0.2, 3.0, 0.6) == std::pair{0, 4});
  CHECK_THROWS_AS(muntin_counts(0.0, 1.0, 0.6), Error);
  CHECK_THROWS_AS(muntin_counts(1.0, 1.0, 0.0), Error);
}

TEST_CASE("geometry: stretching windows, doors and scaled assets") {
  const auto &db = default_asset_db();
  const auto find = [&](const std::string &id) -> const AssetComponent & {
    return *std::find_if(db.begin(), db.end(), [&](const auto &a) { return a.id == id; });
  };
  const json style{{"frame_width", 0.06}, {"muntin_cell", 0.6}};
  const Vec3 target{1.2, 0.1, 1.8};
  const auto window = stretch_component(find("window_grid"), target, style, 0);
  CHECK(window.size() == 8);
  CHECK(near_box(union_bounds(window), Box3::from_center_size({0, 0, 0}, target), 1e-6));
  for (const auto &m : window) {
    CHECK(m.is_watertight());
    CHECK(m.signed_volume() > 0.0);
  }
  // Frame members keep their thickness when the window is widened.
  const auto wide = stretch_component(find("window_grid"), {2.4, 0.1, 1.8}, style, 0);
  const auto thinnest = [](const std::vector<TriangleMesh> &ms) {
    double t = 1e9;
    for (const auto &m : ms) {
      const auto s = m.bounds().size();
      t = std::min(t, std::min(s[0], s[2]));
    }
    return t;
  };
  CHECK(thinnest(wide) == doctest::Approx(thinnest(window)));
  // Rotated onto the y axis.
  const auto rot = stretch_component(find("window_grid"), {0.1, 1.2, 1.8}, style, 1);
  CHECK(near_box(union_bounds(rot), Box3::from_center_size({0, 0, 0}, {0.1, 1.2, 1.8}), 1e-6));
  for (const auto &m : rot) CHECK(m.signed_volume() > 0.0);

  CHECK_THROWS_WITH_AS(stretch_component(find("window_grid"), target, {{"frame_width", 0.7}, {"muntin_cell", 0.6}}, 0),
                       doctest::Contains("FrameTooThick"), Error);
  CHECK_THROWS_WITH_AS(stretch_component(find("wall_prism"), {1, 0, 1}, json::object()), doctest::Contains("DegenerateSize"),
                       Error);

  for (const auto &a : db) {
    if (a.composite()) continue;
    const auto base = base_meshes(a);
    const Box3 b = union_bounds(base);
    const auto same = stretch_component(a, b.size(), json::object(), 0);
    REQUIRE(same.size() == base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      REQUIRE(same[i].vertices.size() == base[i].vertices.size());
      for (std::size_t v = 0; v < base[i].vertices.size(); ++v) {
        for (std::size_t k = 0; k < 3; ++k) CHECK(std::abs(same[i].vertices[v][k] - base[i].vertices[v][k]) < 1e-9);
      }
    }
  }
}

TEST_CASE("geometry: generated solids are watertight across random configurations") {
  const auto &db = default_asset_db();
  Rng rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const auto &asset = db[rng.below(db.size())];
    const Vec3 size{rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0), rng.uniform(0.5, 4.0)};
    json style = json::object();
    style["frame_width"] = rng.uniform(0.02, 0.1);
    style["muntin_cell"] = rng.uniform(0.2, 1.0);
    style["step_height"] = rng.uniform(0.1, 0.3);
    style["bar_spacing"] = rng.uniform(0.1, 0.5);
    const auto meshes = stretch_component(asset, size, style, rng.uniform_int(-1, 1));
    INFO(asset.id << " trial " << trial);
    CHECK_FALSE(meshes.empty());
    for (const auto &m : meshes) {
      CHECK(m.is_watertight());
      CHECK(m.signed_volume() > 0.0);
    }
    CHECK(near_box(union_bounds(meshes), Box3::from_center_size({0, 0, 0}, size), 1e-6));
  }
}

TEST_CASE("geometry: assembly carves attached openings only") {
  BoxLayout l;
  l.boxes = {cbox({0.5, 0.5, 0.3}, {0.6, 0.02, 0.4}, CategoryTaxonomy::kWall),
             cbox({0.4, 0.5, 0.3}, {0.1, 0.03, 0.1}, CategoryTaxonomy::kWindow),
             cbox({0.5, 0.8, 0.1}, {0.08, 0.03, 0.15}, CategoryTaxonomy::kDoor)};
  const auto scene = assemble(rules_of(l));
  const auto *wall = scene.find("c000");
  const auto *window = scene.find("c001");
  const auto *door = scene.find("c002");
  REQUIRE(wall);
  REQUIRE(window);
  REQUIRE(door);
  CHECK(window->parent == "c000");
  CHECK(door->floating);
  CHECK(door->parent.empty());
  CHECK_FALSE(point_in_solids(wall->solids, window->placed_box.center()));
  CHECK(point_in_solids(wall->solids, {0.7 * 12, 0.5 * 12, 0.3 * 12}));
  CHECK(door->placed_box == door->rule_box);
  for (const auto &m : wall->meshes) CHECK(m.is_watertight());
  CHECK(near_box(union_bounds(door->meshes), door->rule_box, 1e-6));

  // Thin walls are thickened to the floor thickness with a warning.
  BoxLayout thin;
  thin.boxes = {cbox({0.5, 0.5, 0.5}, {0.5, 0.002, 0.5}, CategoryTaxonomy::kWall)};
  const auto ts = assemble(rules_of(thin));
  CHECK(ts.nodes[0].placed_box.size()[1] == doctest::Approx(kMinWallThickness));
  CHECK(ts.warnings.size() == 1);
}

TEST_CASE("geometry: demo building bounds match the rule boxes") {
  const auto rules = rules_of(demo_building());
  REQUIRE(rules.components.size() == 12);
  const auto scene = assemble(rules);
  CHECK(scene.warnings.empty());
  const std::string obj = export_obj(scene);
  const auto bounds = obj_bounds(obj);
  CHECK(bounds.size() == 12);
  std::size_t vertex_total = 0;
  for (const auto &n : scene.nodes) {
    for (const auto &m : n.meshes) vertex_total += m.vertices.size();
  }
  std::size_t parsed_vertices = 0;
  for (const auto &g : parse_obj(obj)) parsed_vertices += g.vertices.size();
  CHECK(parsed_vertices == vertex_total);
  for (const auto &c : rules.components) {
    const double k = rules.meta.world_scale;
    const Box3 want = Box3::from_center_size({c.center[0] * k, c.center[1] * k, c.center[2] * k},
                                             {c.size[0] * k, c.size[1] * k, c.size[2] * k});
    INFO(c.id << " " << c.category);
    REQUIRE(bounds.count("component_" + c.id));
    CHECK(near_box(bounds.at("component_" + c.id), want, 1e-6));
  }
  CHECK(export_obj(assemble(rules)) == obj);
}

TEST_CASE("geometry: every synthetic building assembles with faithful bounds") {
  SynthConfig sc;
  sc.count = 12;
  sc.seed = 77;
  for (const auto &l : synth_dataset(sc)) {
    const auto rules = rules_of(l);
    const auto scene = assemble(rules);
    for (const auto &n : scene.nodes) {
      for (const auto &m : n.meshes) CHECK(m.is_watertight());
      if (n.category == "wall" && n.placed_box != n.rule_box) continue;
      CHECK(near_box(union_bounds(n.meshes), n.rule_box, 1e-6));
    }
  }
}

TEST_CASE("geometry: sibling alignment") {
  // Wall 3 m tall at world_scale 12, windows with bottoms 1.00, 1.02, 0.99 m.
  const double k = 12.0;
  BoxLayout l;
  l.boxes = {cbox({0.5, 0.5, 1.5 / k}, {0.8, 0.3 / k, 3.0 / k}, CategoryTaxonomy::kWall)};
  const double bottoms[] = {1.00, 1.02, 0.99};
  for (int i = 0; i < 3; ++i) {
    l.boxes.push_back(cbox({0.2 + 0.3 * i, 0.5, (bottoms[i] + 0.3) / k}, {0.1, 0.4 / k, 0.6 / k}, CategoryTaxonomy::kWindow));
  }
  const auto scene = assemble(rules_of(l));
  CHECK(scene.building_height() == doctest::Approx(3.0));
  const auto aligned = align_siblings(scene, 0.02);
  for (const auto &n : aligned.nodes) {
    if (n.category != "window") continue;
    CHECK(n.placed_box.lo[2] == doctest::Approx(1.00).epsilon(1e-12));
    const auto *orig = scene.find(n.id);
    for (std::size_t a = 0; a < 3; ++a) CHECK(std::abs(n.placed_box.lo[a] - orig->placed_box.lo[a]) <= 0.06 + 1e-12);
    CHECK(near_box(union_bounds(n.meshes), n.placed_box, 1e-6));
  }
  const auto twice = align_siblings(aligned, 0.02);
  CHECK(export_obj(twice) == export_obj(aligned));

  // Too far apart: nothing moves.
  BoxLayout spread = l;
  spread.boxes[2].center[2] = (1.5 + 0.3) / k;
  const auto s2 = assemble(rules_of(spread));
  const auto a2 = align_siblings(s2, 0.02);
  CHECK(a2.find("c002")->placed_box.lo[2] == doctest::Approx(1.5));

  // A single window is unchanged.
  BoxLayout single;
  single.boxes = {l.boxes[0], l.boxes[1]};
  const auto s1 = assemble(rules_of(single));
  CHECK(export_obj(align_siblings(s1, 0.02)) == export_obj(s1));

  // Depth offsets within tolerance snap to the wall mid-plane.
  BoxLayout depth = single;
  depth.boxes[1].center[1] = 0.5 + 0.02 / k;
  const auto sd = align_siblings(assemble(rules_of(depth)), 0.02);
  CHECK(sd.find("c001")->placed_box.center()[1] == doctest::Approx(0.5 * k));
}

TEST_CASE("geometry: OBJ export format") {
  BoxLayout cube;
  cube.boxes = {cbox({0.5, 0.5, 0.5}, {0.1, 0.1, 0.1}, CategoryTaxonomy::kDecoration)};
  const auto scene = assemble(rules_of(cube));
  const std::string obj = export_obj(scene);
  std::size_t v = 0, f = 0, g = 0;
  std::istringstream in(obj);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("v ", 0) == 0) ++v;
    if (line.rfind("f ", 0) == 0) ++f;
    if (line.rfind("g ", 0) == 0) ++g;
  }
  CHECK(v == 8);
  CHECK(f == 12);
  CHECK(g == 1);
  CHECK(obj.find("g component_c000\nusemtl stone\n") != std::string::npos);
  CHECK(obj.find("v 5.400000 5.400000 5.400000") != std::string::npos);

  const auto manifest = scene_manifest(scene);
  CHECK(manifest["c000"]["category"] == "decoration");
  CHECK(manifest["c000"]["material"] == "stone");

  CHECK(obj.find("f -") != std::string::npos);
  const auto groups = parse_obj(obj);
  REQUIRE(groups.size() == 1);
  for (const auto &t : groups[0].faces) {
    for (int idx : t) CHECK((idx >= 1 && idx <= 8));
  }
  // Absolute and relative forms resolve to the same faces.
  const auto abs = parse_obj("g a\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\ng b\nv 0 0 1\nv 1 0 1\nv 0 1 1\nf 4 5 6\n");
  const auto rel = parse_obj("g a\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\ng b\nv 0 0 1\nv 1 0 1\nv 0 1 1\nf -3 -2 -1\n");
  CHECK(abs[1].faces == rel[1].faces);
  CHECK(rel[1].faces[0] == Triangle{4, 5, 6});

  CHECK_THROWS_WITH_AS(parse_obj("v 1 2\n"), doctest::Contains("ParseError"), Error);
  CHECK_THROWS_AS(parse_obj("g a\nv 1 2 3\nf 1 2 9\n"), Error);
  CHECK_THROWS_AS(parse_obj("g a\nv 1 2 3\nf -1 -2 -1\n"), Error);
}

namespace {

/// OBJ text split at "g" lines.
std::map<std::string, std::string> sections(const std::string &obj) {
  std::map<std::string, std::string> out;
  std::string current;
  std::istringstream in(obj);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("g ", 0) == 0) current = line;
    out[current] += line + "\n";
  }
  return out;
}

void restyle_modern(json &style) {
  for (auto &[key, value] : style.items()) {
    if (value.is_string()) value = "modern";
  }
}

} // namespace

TEST_CASE("geometry: a style edit only changes the edited component's group") {
  const auto rules = rules_of(demo_building());
  const auto before = sections(export_obj(assemble(rules)));
  // c004 is a window: swapping its style tag retrieves a different asset
  // with a different vertex count.
  for (const char *id : {"c000", "c004", "c008"}) {
    auto edited = rules;
    edited.find(id)->style["material"] = "brick";
    edited.find(id)->style["color"] = "blue";
    if (std::string(id) == "c004") restyle_modern(edited.find(id)->style);
    const auto after = sections(export_obj(assemble(edited)));
    REQUIRE(after.size() == before.size());
    for (const auto &[name, text] : before) {
      INFO(id << " " << name);
      CHECK((after.at(name) == text) == (name != std::string("g component_") + id));
    }
  }
  auto swapped = rules;
  restyle_modern(swapped.find("c004")->style);
  CHECK(assemble(swapped).find("c004")->asset_id != assemble(rules).find("c004")->asset_id);
}
