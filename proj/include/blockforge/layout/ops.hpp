#pragma once

#include <string_view>

#include "blockforge/core/rng.hpp"
#include "blockforge/layout/box.hpp"

namespace blockforge {

enum class PadMode { PadReal, Zeros };

enum class AugmentOp { Identity, Rot90, Rot180, Rot270, MirrorX, MirrorY };

inline constexpr int kAugmentOpCount = 6;

/// Uniformly rescales and translates so the tight bounds of the non-empty
/// boxes fit the unit cube with their center at (0.5, 0.5, 0.5).
/// Throws EmptyLayout / DegenerateSize.
BoxLayout normalize_layout(const BoxLayout &layout);

/// Drops existing empty boxes and pads with empty-class boxes up to
/// `max_boxes`. PadReal copies center/size from a uniformly chosen real box.
/// Throws TooManyBoxes, or EmptyLayout for PadReal without donors.
BoxLayout pad_layout(const BoxLayout &layout, int max_boxes, Rng &rng, PadMode mode);

/// Quarter-turn rotations about the vertical (z) axis through (0.5, 0.5)
/// and reflections about x = 0.5 / y = 0.5.
BoxLayout augment(const BoxLayout &layout, AugmentOp op);

AugmentOp augment_op_from_index(int index);

/// Volume of the overlap of two closed boxes (0 when only touching).
double intersection_volume(const ComponentBox &a, const ComponentBox &b);

/// Intersection over union of two boxes. Throws DegenerateSize on
/// non-positive sizes.
double aabb_iou(const ComponentBox &a, const ComponentBox &b);

/// Sum of IoU over unordered box pairs, skipping pairs that involve a wall
/// (exclude_walls) or an empty box (exclude_empty).
double pairwise_iou_sum(const BoxLayout &layout, bool exclude_walls, bool exclude_empty);

} // namespace blockforge
