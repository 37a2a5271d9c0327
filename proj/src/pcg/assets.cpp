#include "blockforge/pcg/assets.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "blockforge/core/error.hpp"

namespace blockforge {

bool AssetComponent::composite() const {
  switch (kind) {
  case AssetKind::GridWindow:
  case AssetKind::PictureWindow:
  case AssetKind::PanelDoor:
  case AssetKind::DoubleDoor:
  case AssetKind::Stairs:
  case AssetKind::Railing:
  case AssetKind::Chimney: return true;
  default: return false;
  }
}

namespace {

Vec3 normalized(Vec3 r) {
  const double m = std::max({r[0], r[1], r[2]});
  for (auto &v : r) v /= m;
  return r;
}

AssetComponent make(const char *id, const char *category, std::vector<std::string> tags, Vec3 ratio, AssetKind kind) {
  return {id, category, std::move(tags), normalized(ratio), kind};
}

} // namespace

const std::vector<AssetComponent> &default_asset_db() {
  static const std::vector<AssetComponent> db = [] {
    std::vector<AssetComponent> v = {
        make("awning_slab", "awning", {"fabric"}, {1.0, 0.1, 0.4}, AssetKind::Block),
        make("balcony_slab", "balcony", {"concrete"}, {1.0, 0.1, 0.4}, AssetKind::Block),
        make("chimney_stack", "chimney", {"brick", "stone"}, {0.5, 1.0, 0.5}, AssetKind::Chimney),
        make("column_round", "column", {"stone", "marble", "medieval"}, {0.3, 1.0, 0.3}, AssetKind::Column),
        make("column_square", "column", {"concrete", "wood", "modern"}, {0.3, 1.0, 0.3}, AssetKind::Block),
        make("decoration_block", "decoration", {}, {1.0, 1.0, 1.0}, AssetKind::Block),
        make("door_double", "door", {"metal", "glass", "modern"}, {1.8, 2.2, 0.12}, AssetKind::DoubleDoor),
        make("door_panel", "door", {"wood", "oak", "medieval", "wooden", "brick"}, {1.0, 2.1, 0.12}, AssetKind::PanelDoor),
        make("floor_slab", "floor", {}, {1.0, 0.02, 1.0}, AssetKind::Block),
        make("garage_door", "garage", {"metal"}, {1.0, 0.85, 0.1}, AssetKind::Block),
        make("railing_posts", "railing", {"metal", "wood"}, {1.0, 0.3, 0.05}, AssetKind::Railing),
        make("roof_flat", "roof", {"flat"}, {1.0, 0.1, 1.0}, AssetKind::FlatRoof),
        make("roof_gable", "roof", {"gable"}, {1.0, 0.4, 0.8}, AssetKind::GableRoof),
        make("roof_hip", "roof", {"hip"}, {1.0, 0.35, 0.8}, AssetKind::HipRoof),
        make("stairs_straight", "stairs", {}, {1.0, 0.6, 0.35}, AssetKind::Stairs),
        make("wall_prism", "wall", {}, {1.0, 0.75, 0.08}, AssetKind::Block),
        make("window_grid", "window", {"wood", "glass_clear", "medieval", "wooden", "brick", "victorian"},
             {1.0, 1.5, 0.1}, AssetKind::GridWindow),
        make("window_picture", "window", {"metal", "glass_reflective", "modern"}, {2.0, 1.2, 0.1},
             AssetKind::PictureWindow),
    };
    std::sort(v.begin(), v.end(), [](const AssetComponent &a, const AssetComponent &b) { return a.id < b.id; });
    return v;
  }();
  return db;
}

Vec3 target_ratio(const Vec3 &size, int width_axis) {
  const auto u = static_cast<std::size_t>(width_axis == 1 ? 1 : 0);
  return normalized({size[u], size[2], size[1 - u]});
}

const AssetComponent &retrieve_component(const std::vector<AssetComponent> &db, const std::string &category,
                                         const std::vector<std::string> &style_tags, const Vec3 &target) {
  std::vector<const AssetComponent *> pool;
  for (const auto &a : db) {
    if (a.category == category) pool.push_back(&a);
  }
  if (pool.empty()) throw Error(ErrorCode::NoAssetForCategory, "no asset for category '" + category + "'");
  const std::set<std::string> wanted(style_tags.begin(), style_tags.end());
  std::vector<const AssetComponent *> styled;
  for (const auto *a : pool) {
    if (std::any_of(a->tags.begin(), a->tags.end(), [&](const std::string &t) { return wanted.count(t) > 0; })) {
      styled.push_back(a);
    }
  }
  if (!styled.empty()) pool = std::move(styled);

  const Vec3 t = normalized(target);
  const AssetComponent *best = nullptr;
  double best_d = 0.0;
  for (const auto *a : pool) {
    double d = 0.0;
    for (std::size_t i = 0; i < 3; ++i) {
      const double diff = std::log(t[i]) - std::log(a->base_ratio[i]);
      d += diff * diff;
    }
    d = std::sqrt(d);
    if (!best || d < best_d || (d == best_d && a->id < best->id)) {
      best = a;
      best_d = d;
    }
  }
  return *best;
}

std::pair<int, int> muntin_counts(double width_m, double height_m, double cell_target_m) {
  if (!(width_m > 0.0) || !(height_m > 0.0) || !(cell_target_m > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "muntin inputs must be positive");
  }
  // The small bias keeps exact halves like 0.9 / 0.6 rounding up.
  auto count = [cell_target_m](double extent) {
    return std::max(0, static_cast<int>(std::floor(extent / cell_target_m + 0.5 + 1e-9)) - 1);
  };
  return {count(width_m), count(height_m)};
}

namespace {

// Local frame: width along x, depth along y, height along z, centered.
struct Local {
  double w, d, h;
};

Box3 lbox(double x0, double x1, double y0, double y1, double z0, double z1) { return {{x0, y0, z0}, {x1, y1, z1}}; }

double style_number(const nlohmann::json &style, const char *key, double fallback) {
  auto it = style.find(key);
  if (it == style.end() || !it->is_number()) return fallback;
  return it->get<double>();
}

std::vector<TriangleMesh> window_meshes(const Local &s, const nlohmann::json &style, bool horizontal_bars) {
  const double fw = style_number(style, "frame_width", 0.06);
  const double cell = style_number(style, "muntin_cell", 0.6);
  if (!(fw > 0.0) || 2.0 * fw >= std::min(s.w, s.h)) {
    throw Error(ErrorCode::FrameTooThick, "frame_width " + std::to_string(fw) + " does not fit a " +
                                              std::to_string(s.w) + " x " + std::to_string(s.h) + " window");
  }
  const double x0 = -0.5 * s.w, x1 = 0.5 * s.w, y0 = -0.5 * s.d, y1 = 0.5 * s.d, z0 = -0.5 * s.h, z1 = 0.5 * s.h;
  std::vector<TriangleMesh> out;
  out.push_back(box_mesh(lbox(x0, x0 + fw, y0, y1, z0, z1)));
  out.push_back(box_mesh(lbox(x1 - fw, x1, y0, y1, z0, z1)));
  out.push_back(box_mesh(lbox(x0 + fw, x1 - fw, y0, y1, z0, z0 + fw)));
  out.push_back(box_mesh(lbox(x0 + fw, x1 - fw, y0, y1, z1 - fw, z1)));

  auto [nx, ny] = muntin_counts(s.w, s.h, cell);
  if (!horizontal_bars) ny = 0;
  const double bar = 0.5 * fw, bd = 0.25 * s.d;
  const double iw = s.w - 2.0 * fw, ih = s.h - 2.0 * fw;
  for (int k = 1; k <= nx; ++k) {
    const double cx = x0 + fw + k * iw / (nx + 1);
    out.push_back(box_mesh(lbox(cx - 0.5 * bar, cx + 0.5 * bar, -bd, bd, z0 + fw, z1 - fw)));
  }
  for (int k = 1; k <= ny; ++k) {
    const double cz = z0 + fw + k * ih / (ny + 1);
    out.push_back(box_mesh(lbox(x0 + fw, x1 - fw, -bd, bd, cz - 0.5 * bar, cz + 0.5 * bar)));
  }
  const double gd = 0.1 * s.d;
  out.push_back(box_mesh(lbox(x0 + fw, x1 - fw, -gd, gd, z0 + fw, z1 - fw)));
  return out;
}

std::vector<TriangleMesh> door_meshes(const Local &s, const nlohmann::json &style, int leaves) {
  const double fw = style_number(style, "frame_width", 0.08);
  if (!(fw > 0.0) || 2.0 * fw >= std::min(s.w, s.h)) {
    throw Error(ErrorCode::FrameTooThick, "frame_width " + std::to_string(fw) + " does not fit a " +
                                              std::to_string(s.w) + " x " + std::to_string(s.h) + " door");
  }
  const double x0 = -0.5 * s.w, x1 = 0.5 * s.w, y0 = -0.5 * s.d, y1 = 0.5 * s.d, z0 = -0.5 * s.h, z1 = 0.5 * s.h;
  std::vector<TriangleMesh> out;
  out.push_back(box_mesh(lbox(x0, x0 + fw, y0, y1, z0, z1)));
  out.push_back(box_mesh(lbox(x1 - fw, x1, y0, y1, z0, z1)));
  out.push_back(box_mesh(lbox(x0 + fw, x1 - fw, y0, y1, z1 - fw, z1)));
  const double lw = (s.w - 2.0 * fw) / leaves, ld = 0.25 * s.d;
  for (int k = 0; k < leaves; ++k) {
    out.push_back(box_mesh(lbox(x0 + fw + k * lw, x0 + fw + (k + 1) * lw, -ld, ld, z0, z1 - fw)));
  }
  return out;
}

std::vector<TriangleMesh> stairs_meshes(const Local &s, const nlohmann::json &style) {
  const double rise = style_number(style, "step_height", 0.18);
  const int n = std::max(1, static_cast<int>(std::lround(s.h / std::max(rise, 1e-3))));
  std::vector<TriangleMesh> out;
  for (int k = 0; k < n; ++k) {
    out.push_back(box_mesh(lbox(-0.5 * s.w + k * s.w / n, -0.5 * s.w + (k + 1) * s.w / n, -0.5 * s.d, 0.5 * s.d,
                                -0.5 * s.h, -0.5 * s.h + (k + 1) * s.h / n)));
  }
  return out;
}

std::vector<TriangleMesh> railing_meshes(const Local &s, const nlohmann::json &style) {
  const double spacing = style_number(style, "bar_spacing", 0.12);
  const int posts = std::max(2, static_cast<int>(std::lround(s.w / std::max(spacing, 1e-3))) + 1);
  const double rh = std::min(0.05, 0.25 * s.h);
  const double pw = std::min(0.04, s.w / (2.0 * posts));
  std::vector<TriangleMesh> out;
  out.push_back(box_mesh(lbox(-0.5 * s.w, 0.5 * s.w, -0.5 * s.d, 0.5 * s.d, 0.5 * s.h - rh, 0.5 * s.h)));
  for (int k = 0; k < posts; ++k) {
    const double cx = -0.5 * s.w + 0.5 * pw + k * (s.w - pw) / (posts - 1);
    out.push_back(box_mesh(lbox(cx - 0.5 * pw, cx + 0.5 * pw, -0.5 * s.d, 0.5 * s.d, -0.5 * s.h, 0.5 * s.h - rh)));
  }
  return out;
}

std::vector<TriangleMesh> chimney_meshes(const Local &s) {
  const double cap = 0.15 * s.h;
  std::vector<TriangleMesh> out;
  out.push_back(box_mesh(lbox(-0.4 * s.w, 0.4 * s.w, -0.4 * s.d, 0.4 * s.d, -0.5 * s.h, 0.5 * s.h - cap)));
  out.push_back(box_mesh(lbox(-0.5 * s.w, 0.5 * s.w, -0.5 * s.d, 0.5 * s.d, 0.5 * s.h - cap, 0.5 * s.h)));
  return out;
}

std::vector<TriangleMesh> simple_meshes(AssetKind kind, const Local &s) {
  const Box3 b = lbox(-0.5 * s.w, 0.5 * s.w, -0.5 * s.d, 0.5 * s.d, -0.5 * s.h, 0.5 * s.h);
  switch (kind) {
  case AssetKind::GableRoof: return {gable_roof_mesh(b)};
  case AssetKind::HipRoof: return {hip_roof_mesh(b)};
  case AssetKind::Column: {
    constexpr double t = 0.41421356237309503;  // tan(pi / 8)
    const double a = 0.5 * s.w, c = 0.5 * s.d;
    return {extruded_prism({{a, -c * t}, {a, c * t}, {a * t, c}, {-a * t, c}, {-a, c * t}, {-a, -c * t}, {-a * t, -c}, {a * t, -c}},
                           2, b.lo[2], b.hi[2])};
  }
  default: return {box_mesh(b)};
  }
}

std::vector<TriangleMesh> build_local(const AssetComponent &asset, const Local &s, const nlohmann::json &style) {
  switch (asset.kind) {
  case AssetKind::GridWindow: return window_meshes(s, style, true);
  case AssetKind::PictureWindow: return window_meshes(s, style, false);
  case AssetKind::PanelDoor: return door_meshes(s, style, 1);
  case AssetKind::DoubleDoor: return door_meshes(s, style, 2);
  case AssetKind::Stairs: return stairs_meshes(s, style);
  case AssetKind::Railing: return railing_meshes(s, style);
  case AssetKind::Chimney: return chimney_meshes(s);
  default: return simple_meshes(asset.kind, s);
  }
}

void swap_xy(std::vector<TriangleMesh> &meshes) {
  for (auto &m : meshes) {
    for (auto &v : m.vertices) std::swap(v[0], v[1]);
    for (auto &t : m.triangles) std::swap(t[1], t[2]);
  }
}

} // namespace

std::vector<TriangleMesh> base_meshes(const AssetComponent &asset) {
  const Local s{asset.base_ratio[0], asset.base_ratio[2], asset.base_ratio[1]};
  return build_local(asset, s, nlohmann::json::object());
}

std::vector<TriangleMesh> stretch_component(const AssetComponent &asset, const Vec3 &target_size,
                                            const nlohmann::json &style, int width_axis) {
  for (double v : target_size) {
    if (!(v > 0.0)) throw Error(ErrorCode::DegenerateSize, "target size must be positive");
  }
  if (width_axis < 0) width_axis = target_size[1] > target_size[0] ? 1 : 0;
  const auto u = static_cast<std::size_t>(width_axis == 1 ? 1 : 0);
  const Local s{target_size[u], target_size[1 - u], target_size[2]};

  std::vector<TriangleMesh> meshes;
  if (asset.composite()) {
    meshes = build_local(asset, s, style);
  } else {
    meshes = base_meshes(asset);
    const Vec3 scale{s.w / asset.base_ratio[0], s.d / asset.base_ratio[2], s.h / asset.base_ratio[1]};
    for (auto &m : meshes) {
      for (auto &v : m.vertices) {
        for (std::size_t a = 0; a < 3; ++a) v[a] *= scale[a];
      }
    }
  }
  if (u == 1) swap_xy(meshes);
  return meshes;
}

} // namespace blockforge
