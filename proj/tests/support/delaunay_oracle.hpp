#pragma once

#include <cstddef>
#include <vector>

#include "roadrl/netgen.hpp"
#include "roadrl/rng.hpp"

namespace roadrl::oracle {

inline long double orient_ld(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  return (static_cast<long double>(b.x) - a.x) * (static_cast<long double>(c.y) - a.y) -
         (static_cast<long double>(b.y) - a.y) * (static_cast<long double>(c.x) - a.x);
}

// Brute force: p lies on the hull boundary iff some other point q leaves every
// input point on one closed side of line pq.
inline std::size_t hull_point_count(const std::vector<PlanarPoint>& pts) {
  std::size_t h = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool boundary = false;
    for (std::size_t j = 0; j < pts.size() && !boundary; ++j) {
      if (j == i) continue;
      bool left = true, right = true;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        const long double o = orient_ld(pts[i], pts[j], pts[k]);
        if (o < 0) left = false;
        if (o > 0) right = false;
      }
      boundary = left || right;
    }
    h += boundary;
  }
  return h;
}

inline bool circumcircle_empty(const Triangulation& tri, double rel_tol) {
  const auto& v = tri.vertices;
  for (const auto& t : tri.triangles) {
    const long double ax = v[t[0]].x, ay = v[t[0]].y;
    const long double bx = v[t[1]].x - ax, by = v[t[1]].y - ay;
    const long double cx = v[t[2]].x - ax, cy = v[t[2]].y - ay;
    const long double d = 2 * (bx * cy - by * cx);
    const long double ux = (cy * (bx * bx + by * by) - by * (cx * cx + cy * cy)) / d;
    const long double uy = (bx * (cx * cx + cy * cy) - cx * (bx * bx + by * by)) / d;
    const long double r2 = ux * ux + uy * uy;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k == t[0] || k == t[1] || k == t[2]) continue;
      const long double dx = v[k].x - ax - ux, dy = v[k].y - ay - uy;
      if (dx * dx + dy * dy < r2 * (1 - rel_tol)) return false;
    }
  }
  return true;
}

inline std::vector<PlanarPoint> random_points(Rng& rng, std::size_t n) {
  std::vector<PlanarPoint> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.uniform(0, 1000), rng.uniform(0, 1000)});
  return pts;
}

}  // namespace roadrl::oracle
