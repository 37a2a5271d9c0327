#pragma once

#include <array>
#include <vector>

#include "blockforge/layout/box.hpp"

namespace blockforge {

/// Axis-aligned box by corners, in meters.
struct Box3 {
  Vec3 lo{0.0, 0.0, 0.0};
  Vec3 hi{0.0, 0.0, 0.0};

  static Box3 from_center_size(const Vec3 &center, const Vec3 &size);
  Vec3 center() const;
  Vec3 size() const;
  double volume() const;
  bool contains(const Vec3 &p) const;

  friend bool operator==(const Box3 &, const Box3 &) = default;
  friend auto operator<=>(const Box3 &, const Box3 &) = default;
};

/// Volume of the overlap of two boxes (0 when only touching).
double overlap_volume(const Box3 &a, const Box3 &b);

using Triangle = std::array<int, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  Box3 bounds() const;
  /// Oriented volume via the divergence theorem; positive for outward faces.
  double signed_volume() const;
  /// Every undirected edge is used by exactly two triangles, once in each
  /// direction; indices are in range and no triangle is degenerate.
  bool is_watertight() const;
  void translate(const Vec3 &offset);
};

/// Closed box solid, 8 vertices and 12 outward triangles.
TriangleMesh box_mesh(const Box3 &box);

/// Closed prism: convex counter-clockwise polygon in the (a, b) plane swept
/// along `axis` from t0 to t1. (a, b, axis) is a cyclic permutation of
/// (x, y, z) starting at `axis` + 1.
TriangleMesh extruded_prism(const std::vector<std::array<double, 2>> &polygon, int axis, double t0, double t1);

/// Hip roof over `box`: ridge along the longer horizontal axis; a pyramid
/// when the footprint is square.
TriangleMesh hip_roof_mesh(const Box3 &box);

/// Gable roof: triangular prism with the ridge along the longer horizontal
/// axis at the top of the box.
TriangleMesh gable_roof_mesh(const Box3 &box);

/// Point strictly inside at least one of the box solids.
bool point_in_solids(const std::vector<Box3> &solids, const Vec3 &p);

} // namespace blockforge
