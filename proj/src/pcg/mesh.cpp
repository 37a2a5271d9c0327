#include "blockforge/pcg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "blockforge/core/error.hpp"

namespace blockforge {

Box3 Box3::from_center_size(const Vec3 &center, const Vec3 &size) {
  Box3 b;
  for (std::size_t a = 0; a < 3; ++a) {
    b.lo[a] = center[a] - 0.5 * size[a];
    b.hi[a] = center[a] + 0.5 * size[a];
  }
  return b;
}

Vec3 Box3::center() const { return {0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])}; }

Vec3 Box3::size() const { return {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}; }

double Box3::volume() const {
  const auto s = size();
  return s[0] * s[1] * s[2];
}

bool Box3::contains(const Vec3 &p) const {
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(p[a] > lo[a] && p[a] < hi[a])) return false;
  }
  return true;
}

double overlap_volume(const Box3 &a, const Box3 &b) {
  double v = 1.0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double d = std::min(a.hi[i], b.hi[i]) - std::max(a.lo[i], b.lo[i]);
    if (!(d > 0.0)) return 0.0;
    v *= d;
  }
  return v;
}

Box3 TriangleMesh::bounds() const {
  Box3 b;
  if (vertices.empty()) return b;
  b.lo = b.hi = vertices.front();
  for (const auto &v : vertices) {
    for (std::size_t a = 0; a < 3; ++a) {
      b.lo[a] = std::min(b.lo[a], v[a]);
      b.hi[a] = std::max(b.hi[a], v[a]);
    }
  }
  return b;
}

namespace {

Vec3 sub(const Vec3 &a, const Vec3 &b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }

Vec3 cross(const Vec3 &a, const Vec3 &b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3 &a, const Vec3 &b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

} // namespace

double TriangleMesh::signed_volume() const {
  double v = 0.0;
  for (const auto &t : triangles) {
    const auto &a = vertices[static_cast<std::size_t>(t[0])];
    const auto &b = vertices[static_cast<std::size_t>(t[1])];
    const auto &c = vertices[static_cast<std::size_t>(t[2])];
    v += dot(a, cross(b, c));
  }
  return v / 6.0;
}

bool TriangleMesh::is_watertight() const {
  if (triangles.empty()) return false;
  const int n = static_cast<int>(vertices.size());
  std::map<std::pair<int, int>, int> directed;
  for (const auto &t : triangles) {
    for (int k = 0; k < 3; ++k) {
      if (t[static_cast<std::size_t>(k)] < 0 || t[static_cast<std::size_t>(k)] >= n) return false;
    }
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) return false;
    const auto &a = vertices[static_cast<std::size_t>(t[0])];
    const auto &b = vertices[static_cast<std::size_t>(t[1])];
    const auto &c = vertices[static_cast<std::size_t>(t[2])];
    const Vec3 nrm = cross(sub(b, a), sub(c, a));
    if (!(dot(nrm, nrm) > 0.0)) return false;
    for (int k = 0; k < 3; ++k) {
      const int u = t[static_cast<std::size_t>(k)], v = t[static_cast<std::size_t>((k + 1) % 3)];
      if (++directed[{u, v}] > 1) return false;
    }
  }
  for (const auto &[edge, count] : directed) {
    auto it = directed.find({edge.second, edge.first});
    if (it == directed.end() || it->second != 1) return false;
  }
  return true;
}

void TriangleMesh::translate(const Vec3 &offset) {
  for (auto &v : vertices) {
    for (std::size_t a = 0; a < 3; ++a) v[a] += offset[a];
  }
}

TriangleMesh extruded_prism(const std::vector<std::array<double, 2>> &polygon, int axis, double t0, double t1) {
  if (polygon.size() < 3 || axis < 0 || axis > 2 || !(t1 > t0)) {
    throw Error(ErrorCode::InvalidArgument, "prism needs >= 3 points, an axis in 0..2 and t1 > t0");
  }
  std::vector<std::array<double, 2>> poly = polygon;
  double area2 = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto &p = poly[i];
    const auto &q = poly[(i + 1) % poly.size()];
    area2 += p[0] * q[1] - q[0] * p[1];
  }
  if (area2 < 0.0) std::reverse(poly.begin(), poly.end());

  const auto ax = static_cast<std::size_t>(axis);
  const auto a = (ax + 1) % 3, b = (ax + 2) % 3;
  const int n = static_cast<int>(poly.size());
  TriangleMesh m;
  for (double t : {t0, t1}) {
    for (const auto &p : poly) {
      Vec3 v{};
      v[a] = p[0];
      v[b] = p[1];
      v[ax] = t;
      m.vertices.push_back(v);
    }
  }
  for (int k = 1; k + 1 < n; ++k) {
    m.triangles.push_back({0, k + 1, k});
    m.triangles.push_back({n, n + k, n + k + 1});
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    m.triangles.push_back({i, j, n + j});
    m.triangles.push_back({i, n + j, n + i});
  }
  return m;
}

TriangleMesh box_mesh(const Box3 &box) {
  return extruded_prism({{box.lo[0], box.lo[1]}, {box.hi[0], box.lo[1]}, {box.hi[0], box.hi[1]}, {box.lo[0], box.hi[1]}},
                        2, box.lo[2], box.hi[2]);
}

TriangleMesh gable_roof_mesh(const Box3 &box) {
  const auto s = box.size();
  if (s[0] >= s[1]) {
    const double ym = 0.5 * (box.lo[1] + box.hi[1]);
    return extruded_prism({{box.lo[1], box.lo[2]}, {box.hi[1], box.lo[2]}, {ym, box.hi[2]}}, 0, box.lo[0], box.hi[0]);
  }
  const double xm = 0.5 * (box.lo[0] + box.hi[0]);
  return extruded_prism({{box.lo[2], box.lo[0]}, {box.lo[2], box.hi[0]}, {box.hi[2], xm}}, 1, box.lo[1], box.hi[1]);
}

TriangleMesh hip_roof_mesh(const Box3 &box) {
  const auto s = box.size();
  const bool along_x = s[0] >= s[1];
  // Build with u = long axis, v = short axis, then map back.
  const std::size_t u = along_x ? 0 : 1, v = along_x ? 1 : 0;
  const double u0 = box.lo[u], u1 = box.hi[u], v0 = box.lo[v], v1 = box.hi[v];
  const double z0 = box.lo[2], z1 = box.hi[2];
  const double half = 0.5 * (v1 - v0), vm = 0.5 * (v0 + v1);
  const bool pyramid = !((u1 - u0) - (v1 - v0) > 1e-9 * std::max(1.0, u1 - u0));

  std::vector<std::array<double, 3>> uvz = {{u0, v0, z0}, {u1, v0, z0}, {u1, v1, z0}, {u0, v1, z0}};
  std::vector<Triangle> tris = {{0, 2, 1}, {0, 3, 2}};
  if (pyramid) {
    uvz.push_back({0.5 * (u0 + u1), vm, z1});
    tris.insert(tris.end(), {{0, 1, 4}, {2, 3, 4}, {3, 0, 4}, {1, 2, 4}});
  } else {
    uvz.push_back({u0 + half, vm, z1});
    uvz.push_back({u1 - half, vm, z1});
    tris.insert(tris.end(), {{0, 1, 5}, {0, 5, 4}, {2, 3, 4}, {2, 4, 5}, {3, 0, 4}, {1, 2, 5}});
  }
  TriangleMesh m;
  for (const auto &p : uvz) {
    Vec3 w{};
    w[u] = p[0];
    w[v] = p[1];
    w[2] = p[2];
    m.vertices.push_back(w);
  }
  for (auto t : tris) {
    if (!along_x) std::swap(t[1], t[2]);
    m.triangles.push_back(t);
  }
  return m;
}

bool point_in_solids(const std::vector<Box3> &solids, const Vec3 &p) {
  return std::any_of(solids.begin(), solids.end(), [&p](const Box3 &b) { return b.contains(p); });
}

} // namespace blockforge
