#include "blockforge/pcg/csg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "blockforge/core/error.hpp"

namespace blockforge {

namespace {

constexpr double kSameExtent = 1e-6;

std::vector<double> cuts(const Box3 &wall, const std::vector<Box3> &openings, std::size_t axis) {
  std::vector<double> c{wall.lo[axis], wall.hi[axis]};
  for (const auto &o : openings) {
    for (double v : {o.lo[axis], o.hi[axis]}) {
      if (v > wall.lo[axis] && v < wall.hi[axis]) c.push_back(v);
    }
  }
  std::sort(c.begin(), c.end());
  c.erase(std::unique(c.begin(), c.end()), c.end());
  return c;
}

} // namespace

std::vector<Box3> carve_opening(const Box3 &wall, const std::vector<Box3> &openings) {
  for (const auto &o : openings) {
    if (!(overlap_volume(wall, o) > 0.0)) {
      throw Error(ErrorCode::OpeningOutsideWall, "opening does not overlap the wall");
    }
  }
  if (openings.empty()) return {wall};

  const auto xs = cuts(wall, openings, 0), ys = cuts(wall, openings, 1), zs = cuts(wall, openings, 2);
  const std::size_t nx = xs.size() - 1, ny = ys.size() - 1, nz = zs.size() - 1;

  // Runs along x per (y, z) row, then identical runs stacked along y, then z.
  using Span = std::pair<std::size_t, std::size_t>;
  std::vector<std::vector<std::vector<Span>>> xruns(nz, std::vector<std::vector<Span>>(ny));
  for (std::size_t k = 0; k < nz; ++k) {
    for (std::size_t j = 0; j < ny; ++j) {
      std::size_t i = 0;
      while (i < nx) {
        auto kept = [&](std::size_t ii) {
          const Vec3 c{0.5 * (xs[ii] + xs[ii + 1]), 0.5 * (ys[j] + ys[j + 1]), 0.5 * (zs[k] + zs[k + 1])};
          return !point_in_solids(openings, c);
        };
        if (!kept(i)) {
          ++i;
          continue;
        }
        std::size_t e = i;
        while (e + 1 < nx && kept(e + 1)) ++e;
        xruns[k][j].push_back({i, e});
        i = e + 1;
      }
    }
  }

  // (x span, y span) rectangles per z layer.
  using Rect = std::pair<Span, Span>;
  std::vector<std::vector<Rect>> layers(nz);
  for (std::size_t k = 0; k < nz; ++k) {
    std::map<Span, std::size_t> open;  // x span -> y start
    for (std::size_t j = 0; j <= ny; ++j) {
      std::map<Span, std::size_t> next;
      const std::vector<Span> empty;
      const auto &row = j < ny ? xruns[k][j] : empty;
      for (const auto &s : row) {
        auto it = open.find(s);
        next[s] = it != open.end() ? it->second : j;
      }
      for (const auto &[s, y0] : open) {
        if (!next.count(s) || j == ny) layers[k].push_back({s, {y0, j - 1}});
      }
      if (j == ny) break;
      open = std::move(next);
    }
  }

  std::vector<Box3> out;
  std::map<Rect, std::size_t> open;  // rect -> z start
  for (std::size_t k = 0; k <= nz; ++k) {
    std::map<Rect, std::size_t> next;
    if (k < nz) {
      for (const auto &r : layers[k]) {
        auto it = open.find(r);
        next[r] = it != open.end() ? it->second : k;
      }
    }
    for (const auto &[r, z0] : open) {
      if (k == nz || !next.count(r)) {
        Box3 b;
        b.lo = {xs[r.first.first], ys[r.second.first], zs[z0]};
        b.hi = {xs[r.first.second + 1], ys[r.second.second + 1], zs[k]};
        out.push_back(b);
      }
    }
    open = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

bool same_cross_section(const Box3 &a, const Box3 &b, std::size_t free_axis) {
  for (std::size_t i = 0; i < 3; ++i) {
    if (i == free_axis) continue;
    if (std::abs(a.lo[i] - b.lo[i]) > kSameExtent || std::abs(a.hi[i] - b.hi[i]) > kSameExtent) return false;
  }
  return a.lo[free_axis] <= b.hi[free_axis] && b.lo[free_axis] <= a.hi[free_axis];
}

} // namespace

std::vector<Box3> merge_walls(const std::vector<Box3> &walls) {
  std::vector<Box3> ws = walls;
  std::sort(ws.begin(), ws.end());
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < ws.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < ws.size() && !changed; ++j) {
        for (std::size_t axis = 0; axis < 3; ++axis) {
          if (!same_cross_section(ws[i], ws[j], axis)) continue;
          Box3 u = ws[i];
          u.lo[axis] = std::min(ws[i].lo[axis], ws[j].lo[axis]);
          u.hi[axis] = std::max(ws[i].hi[axis], ws[j].hi[axis]);
          ws[i] = u;
          ws.erase(ws.begin() + static_cast<std::ptrdiff_t>(j));
          std::sort(ws.begin(), ws.end());
          changed = true;
          break;
        }
      }
    }
  }
  std::vector<Box3> out;
  for (std::size_t j = 0; j < ws.size(); ++j) {
    std::vector<Box3> earlier;
    for (std::size_t i = 0; i < j; ++i) {
      if (overlap_volume(ws[i], ws[j]) > 0.0) earlier.push_back(ws[i]);
    }
    const auto pieces = carve_opening(ws[j], earlier);
    out.insert(out.end(), pieces.begin(), pieces.end());
  }
  return out;
}

} // namespace blockforge
