#include "blockforge/synth/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

#include "blockforge/core/error.hpp"
#include "blockforge/layout/jsonl.hpp"
#include "blockforge/layout/ops.hpp"

namespace blockforge {

namespace {

using Cat = CategoryTaxonomy;

constexpr double kFloorHeight = 3.0;
constexpr double kSlab = 0.2;
constexpr double kWallThickness = 0.3;
constexpr double kOpeningDepth = kWallThickness + 0.1;

struct StyleProfile {
  std::string name;
  std::array<const char *, 2> nouns;
  int min_floors, max_floors;
  const char *roof; // flat | gable | hip
  double window_width_lo, window_width_hi;
  double chimney_p, balcony_p, column_p, awning_p, garage_p;
};

const StyleProfile &profile(const std::string &style) {
  static const std::vector<StyleProfile> profiles = {
      {"modern", {"house", "office building"}, 2, 4, "flat", 1.2, 1.8, 0.0, 0.5, 0.1, 0.3, 0.3},
      {"medieval", {"castle", "house"}, 1, 3, "gable", 0.6, 1.0, 0.6, 0.0, 0.2, 0.0, 0.0},
      {"wooden", {"cabin", "lodge"}, 1, 2, "gable", 0.8, 1.2, 0.8, 0.2, 0.1, 0.3, 0.0},
      {"brick", {"townhouse", "house"}, 2, 3, "hip", 0.9, 1.3, 0.5, 0.3, 0.4, 0.2, 0.2},
  };
  for (const auto &p : profiles) {
    if (p.name == style) return p;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown synth style " + style);
}

const char *floor_word(int floors) {
  static constexpr std::array<const char *, 5> words = {"zero", "one", "two", "three", "four"};
  return floors >= 0 && floors < 5 ? words[static_cast<std::size_t>(floors)] : "many";
}

ComponentBox make_box(int category, Vec3 lo, Vec3 hi) {
  ComponentBox b;
  b.category = category;
  for (int k = 0; k < 3; ++k) {
    b.center[k] = 0.5 * (lo[k] + hi[k]);
    b.size[k] = hi[k] - lo[k];
  }
  return b;
}

/// Wall along x (axis 0) or y (axis 1) with its opening positions.
struct WallSpec {
  int along;      // 0 = runs along x, 1 = runs along y
  double start;   // extent along its axis
  double end;
  double plane;   // center of the wall thickness on the other horizontal axis
  double z0;
  bool is_front;
};

} // namespace

const std::vector<std::string> &synth_styles() {
  static const std::vector<std::string> styles = {"modern", "medieval", "wooden", "brick"};
  return styles;
}

BoxLayout synth_building(Rng &rng, const SynthConfig &config) {
  if (config.styles.empty()) throw Error(ErrorCode::InvalidArgument, "synth needs at least one style");
  const std::string style = config.styles[rng.below(config.styles.size())];
  const StyleProfile &prof = profile(style);

  const int floors = std::clamp(rng.uniform_int(prof.min_floors, prof.max_floors), config.min_floors,
                                config.max_floors);
  const double width = rng.uniform(6.0, 14.0);
  const double depth = width * rng.uniform(config.min_aspect, config.max_aspect);
  const double wall_top = floors * kFloorHeight;

  std::vector<ComponentBox> structure; // never dropped
  std::vector<ComponentBox> windows;   // dropped from the end when over budget
  std::vector<ComponentBox> extras;    // optional parts, dropped first

  // Door on the ground-floor front wall.
  const double door_w = rng.uniform(1.0, 1.4);
  const double door_h = rng.uniform(2.1, 2.4);
  const double door_x = rng.uniform(0.3, 0.7) * width;
  const double front_plane = 0.5 * kWallThickness;
  structure.push_back(make_box(Cat::kDoor, {door_x - door_w / 2, front_plane - kOpeningDepth / 2, 0.0},
                               {door_x + door_w / 2, front_plane + kOpeningDepth / 2, door_h}));

  for (int f = 0; f < floors; ++f) {
    const double z0 = f * kFloorHeight;
    // Inset past the opening depth so slabs never touch doors or windows.
    const double inset = 0.5 * kWallThickness + 0.5 * kOpeningDepth;
    structure.push_back(make_box(Cat::kFloor, {inset, inset, z0}, {width - inset, depth - inset, z0 + kSlab}));
    const std::array<WallSpec, 4> walls = {{
        {0, 0.0, width, front_plane, z0, true},
        {0, 0.0, width, depth - 0.5 * kWallThickness, z0, false},
        {1, kWallThickness, depth - kWallThickness, 0.5 * kWallThickness, z0, false},
        {1, kWallThickness, depth - kWallThickness, width - 0.5 * kWallThickness, z0, false},
    }};
    for (const auto &w : walls) {
      Vec3 lo{}, hi{};
      const int other = 1 - w.along;
      lo[w.along] = w.start;
      hi[w.along] = w.end;
      lo[other] = w.plane - kWallThickness / 2;
      hi[other] = w.plane + kWallThickness / 2;
      lo[2] = w.z0;
      hi[2] = w.z0 + kFloorHeight;
      structure.push_back(make_box(Cat::kWall, lo, hi));

      // Windows spread evenly, keeping clear of wall ends and the door.
      const int count = rng.uniform_int(config.min_windows_per_wall, config.max_windows_per_wall);
      const double ww = rng.uniform(prof.window_width_lo, prof.window_width_hi);
      const double wh = rng.uniform(1.0, 1.6);
      const double sill = w.z0 + 0.9;
      const double usable = (w.end - w.start) - 1.0;
      for (int i = 0; i < count; ++i) {
        const double along = w.start + 0.5 + usable * (i + 0.5) / count;
        if (along - ww / 2 < w.start + 0.4 || along + ww / 2 > w.end - 0.4) continue;
        if (f == 0 && w.is_front && std::abs(along - door_x) < (ww + door_w) / 2 + 0.3) continue;
        Vec3 wlo{}, whi{};
        wlo[w.along] = along - ww / 2;
        whi[w.along] = along + ww / 2;
        wlo[other] = w.plane - kOpeningDepth / 2;
        whi[other] = w.plane + kOpeningDepth / 2;
        wlo[2] = sill;
        whi[2] = sill + wh;
        windows.push_back(make_box(Cat::kWindow, wlo, whi));
      }
    }
  }

  // Roof over the footprint.
  const std::string roof_shape = prof.roof;
  const double roof_h = roof_shape == "flat" ? 0.4 : rng.uniform(2.0, 3.5);
  const double overhang = roof_shape == "flat" ? 0.0 : 0.3;
  structure.push_back(make_box(Cat::kRoof, {-overhang, -overhang, wall_top},
                               {width + overhang, depth + overhang, wall_top + roof_h}));

  std::vector<std::string> parts;
  if (rng.bernoulli(prof.chimney_p)) {
    const double cx = rng.uniform(0.2, 0.8) * width;
    const double cy = rng.uniform(0.3, 0.7) * depth;
    extras.push_back(make_box(Cat::kChimney, {cx - 0.35, cy - 0.35, wall_top - 0.5},
                              {cx + 0.35, cy + 0.35, wall_top + roof_h + 0.8}));
    parts.push_back("a chimney");
  }
  if (floors > 1 && rng.bernoulli(prof.balcony_p)) {
    const double bx = rng.uniform(0.3, 0.7) * width;
    const double bw = rng.uniform(2.0, 3.0);
    const double z = kFloorHeight;
    extras.push_back(make_box(Cat::kBalcony, {bx - bw / 2, -1.2, z}, {bx + bw / 2, 0.0, z + kSlab}));
    extras.push_back(make_box(Cat::kRailing, {bx - bw / 2, -1.2, z + kSlab}, {bx + bw / 2, -1.1, z + 1.1}));
    parts.push_back("a balcony");
  }
  if (rng.bernoulli(prof.awning_p)) {
    extras.push_back(make_box(Cat::kAwning, {door_x - door_w / 2 - 0.3, -1.0, door_h + 0.1},
                              {door_x + door_w / 2 + 0.3, 0.0, door_h + 0.3}));
  }
  if (rng.bernoulli(prof.column_p)) {
    for (double side : {-1.0, 1.0}) {
      const double cx = door_x + side * (door_w / 2 + 0.8);
      extras.push_back(make_box(Cat::kColumn, {cx - 0.15, -1.5, 0.0}, {cx + 0.15, -1.2, kFloorHeight}));
    }
    parts.push_back("columns");
  }
  if (rng.bernoulli(prof.garage_p) && width > 9.0) {
    const double gx = door_x < width / 2 ? width - 2.0 : 2.0;
    extras.push_back(make_box(Cat::kGarage, {gx - 1.25, front_plane - kOpeningDepth / 2, 0.0},
                              {gx + 1.25, front_plane + kOpeningDepth / 2, 2.4}));
    parts.push_back("a garage");
  }
  if (floors > 1 && rng.bernoulli(0.4)) {
    extras.push_back(make_box(Cat::kStairs, {width - 2.5, depth / 2 - 0.5, kSlab},
                              {width - 0.5, depth / 2 + 0.5, kFloorHeight}));
  }
  if (rng.bernoulli(0.1)) {
    extras.push_back(make_box(Cat::kDecoration, {width / 2 - 0.5, -0.2, wall_top - 0.6},
                              {width / 2 + 0.5, 0.0, wall_top - 0.1}));
  }

  // Garages and porch columns sit where front windows may have been placed.
  std::erase_if(windows, [&](const ComponentBox &w) {
    return std::any_of(extras.begin(), extras.end(), [&](const ComponentBox &e) {
      return (e.category == Cat::kGarage || e.category == Cat::kColumn) && intersection_volume(w, e) > 0.0;
    });
  });

  const auto budget = static_cast<std::size_t>(config.max_boxes);
  while (structure.size() + windows.size() + extras.size() > budget && !extras.empty()) extras.pop_back();
  while (structure.size() + windows.size() > budget && !windows.empty()) windows.pop_back();
  if (structure.size() > budget) {
    throw Error(ErrorCode::TooManyBoxes, "max_boxes too small for the building structure");
  }
  // Re-derive part mentions from what survived the budget.
  parts.clear();
  auto has = [&](int cat) {
    return std::any_of(extras.begin(), extras.end(), [cat](const ComponentBox &b) { return b.category == cat; });
  };
  if (has(Cat::kChimney)) parts.push_back("a chimney");
  if (has(Cat::kBalcony)) parts.push_back("a balcony");
  if (has(Cat::kColumn)) parts.push_back("columns");
  if (has(Cat::kGarage)) parts.push_back("a garage");

  BoxLayout layout;
  layout.style = style;
  layout.boxes = structure;
  layout.boxes.insert(layout.boxes.end(), windows.begin(), windows.end());
  layout.boxes.insert(layout.boxes.end(), extras.begin(), extras.end());

  std::string prompt = std::string("a ") + floor_word(floors) + "-story " + style + " " +
                       prof.nouns[rng.below(2)] + " with a " + roof_shape + " roof";
  for (std::size_t i = 0; i < parts.size(); ++i) {
    prompt += (i + 1 == parts.size() && i > 0) ? " and " : ", ";
    prompt += parts[i];
  }
  layout.prompt = prompt;
  return normalize_layout(layout);
}

std::vector<BoxLayout> synth_dataset(const SynthConfig &config) {
  if (config.count < 0) throw Error(ErrorCode::InvalidArgument, "count must be non-negative");
  std::vector<BoxLayout> out;
  out.reserve(static_cast<std::size_t>(config.count));
  const Rng root(config.seed);
  for (int i = 0; i < config.count; ++i) {
    Rng rng = root.split(static_cast<std::uint64_t>(i));
    BoxLayout layout = synth_building(rng, config);
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%05d", i);
    layout.id = id;
    out.push_back(std::move(layout));
  }
  return out;
}

void write_synth_dataset(const SynthConfig &config, const std::filesystem::path &path) {
  save_jsonl(synth_dataset(config), path);
}

} // namespace blockforge
