#include "blockforge/layout/ops.hpp"

#include <algorithm>
#include <limits>

#include "blockforge/core/error.hpp"

namespace blockforge {

namespace {

void check_sizes(const ComponentBox &b) {
  for (double s : b.size) {
    if (!(s > 0.0)) throw Error(ErrorCode::DegenerateSize, "box size component must be positive");
  }
}

} // namespace

BoxLayout normalize_layout(const BoxLayout &layout) {
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-lo[0], -lo[1], -lo[2]};
  bool any = false;
  for (const auto &b : layout.boxes) {
    check_sizes(b);
    if (b.is_empty()) continue;
    any = true;
    const Vec3 blo = b.lo(), bhi = b.hi();
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], blo[k]);
      hi[k] = std::max(hi[k], bhi[k]);
    }
  }
  if (!any) throw Error(ErrorCode::EmptyLayout, "layout has no non-empty boxes");

  const double extent = std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  const double scale = 1.0 / extent;
  Vec3 mid;
  for (int k = 0; k < 3; ++k) mid[k] = 0.5 * (lo[k] + hi[k]);

  BoxLayout out = layout;
  for (auto &b : out.boxes) {
    for (int k = 0; k < 3; ++k) {
      b.center[k] = 0.5 + (b.center[k] - mid[k]) * scale;
      b.size[k] *= scale;
    }
  }
  return out;
}

BoxLayout pad_layout(const BoxLayout &layout, int max_boxes, Rng &rng, PadMode mode) {
  BoxLayout out = layout;
  out.boxes.clear();
  for (const auto &b : layout.boxes) {
    if (!b.is_empty()) out.boxes.push_back(b);
  }
  const auto real = out.boxes.size();
  if (real > static_cast<std::size_t>(max_boxes)) {
    throw Error(ErrorCode::TooManyBoxes, std::to_string(real) + " boxes exceed max_boxes " +
                                             std::to_string(max_boxes));
  }
  if (real == static_cast<std::size_t>(max_boxes)) return out;
  if (mode == PadMode::PadReal && real == 0) {
    throw Error(ErrorCode::EmptyLayout, "PadReal needs at least one real box");
  }
  while (out.boxes.size() < static_cast<std::size_t>(max_boxes)) {
    ComponentBox pad;
    pad.category = CategoryTaxonomy::kEmpty;
    if (mode == PadMode::PadReal) {
      const auto &donor = out.boxes[rng.below(real)];
      pad.center = donor.center;
      pad.size = donor.size;
    } else {
      pad.center = {0.0, 0.0, 0.0};
      pad.size = {kMinBoxSize, kMinBoxSize, kMinBoxSize};
    }
    out.boxes.push_back(pad);
  }
  return out;
}

AugmentOp augment_op_from_index(int index) {
  switch (index) {
  case 0: return AugmentOp::Identity;
  case 1: return AugmentOp::Rot90;
  case 2: return AugmentOp::Rot180;
  case 3: return AugmentOp::Rot270;
  case 4: return AugmentOp::MirrorX;
  case 5: return AugmentOp::MirrorY;
  default: throw Error(ErrorCode::InvalidArgument, "augment op index " + std::to_string(index));
  }
}

BoxLayout augment(const BoxLayout &layout, AugmentOp op) {
  BoxLayout out = layout;
  for (auto &b : out.boxes) {
    const double x = b.center[0], y = b.center[1];
    const double sx = b.size[0], sy = b.size[1];
    switch (op) {
    case AugmentOp::Identity: break;
    case AugmentOp::Rot90:
      b.center[0] = 1.0 - y;
      b.center[1] = x;
      b.size[0] = sy;
      b.size[1] = sx;
      break;
    case AugmentOp::Rot180:
      b.center[0] = 1.0 - x;
      b.center[1] = 1.0 - y;
      break;
    case AugmentOp::Rot270:
      b.center[0] = y;
      b.center[1] = 1.0 - x;
      b.size[0] = sy;
      b.size[1] = sx;
      break;
    case AugmentOp::MirrorX: b.center[0] = 1.0 - x; break;
    case AugmentOp::MirrorY: b.center[1] = 1.0 - y; break;
    }
  }
  return out;
}

double intersection_volume(const ComponentBox &a, const ComponentBox &b) {
  double volume = 1.0;
  for (int k = 0; k < 3; ++k) {
    const double lo = std::max(a.center[k] - 0.5 * a.size[k], b.center[k] - 0.5 * b.size[k]);
    const double hi = std::min(a.center[k] + 0.5 * a.size[k], b.center[k] + 0.5 * b.size[k]);
    if (hi <= lo) return 0.0;
    volume *= hi - lo;
  }
  return volume;
}

double aabb_iou(const ComponentBox &a, const ComponentBox &b) {
  check_sizes(a);
  check_sizes(b);
  const double inter = intersection_volume(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.volume() + b.volume() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double pairwise_iou_sum(const BoxLayout &layout, bool exclude_walls, bool exclude_empty) {
  // Sum over canonically ordered boxes so the result is independent of the
  // input permutation bit for bit.
  std::vector<ComponentBox> boxes;
  for (const auto &b : layout.boxes) {
    if (exclude_walls && b.category == CategoryTaxonomy::kWall) continue;
    if (exclude_empty && b.is_empty()) continue;
    boxes.push_back(b);
  }
  boxes = sorted_boxes(std::move(boxes));
  double total = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) total += aabb_iou(boxes[i], boxes[j]);
  }
  return total;
}

} // namespace blockforge
