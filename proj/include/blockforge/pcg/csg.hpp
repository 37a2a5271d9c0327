#pragma once

#include <vector>

#include "blockforge/pcg/mesh.hpp"

namespace blockforge {

/// Removes the openings from the wall by axis-aligned cell decomposition:
/// the wall is split on every opening extent, cells whose centers fall in an
/// opening are dropped, and kept cells are coalesced along x, then y, then z.
/// Output is sorted. Throws OpeningOutsideWall for an opening with no
/// positive-volume overlap.
std::vector<Box3> carve_opening(const Box3 &wall, const std::vector<Box3> &openings);

/// Walls with identical extents on two axes that overlap or abut on the third
/// are unioned; any remaining overlap is removed from the lexicographically
/// later wall. The result covers the union of the inputs without overlaps.
std::vector<Box3> merge_walls(const std::vector<Box3> &walls);

} // namespace blockforge
