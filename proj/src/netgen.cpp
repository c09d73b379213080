#include "roadrl/netgen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "roadrl/error.hpp"

namespace roadrl {

namespace {

using Tri = std::array<std::uint32_t, 3>;

constexpr double kInsideTol = 1e-12;     // strict-interior threshold for insertion
constexpr double kCocircularTol = 1e-9;  // relative, for the tie-break pass
constexpr double kSuperScale = 1e5;

struct Circle {
  double cx, cy, r;
};

Circle circumcircle(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  const double bx = b.x - a.x, by = b.y - a.y;
  const double cx = c.x - a.x, cy = c.y - a.y;
  const double d = 2.0 * (bx * cy - by * cx);
  const double b2 = bx * bx + by * by, c2 = cx * cx + cy * cy;
  const double ux = (cy * b2 - by * c2) / d;
  const double uy = (bx * c2 - cx * b2) / d;
  return {a.x + ux, a.y + uy, std::hypot(ux, uy)};
}

UndirectedEdge key(std::uint32_t a, std::uint32_t b) { return a < b ? UndirectedEdge{a, b} : UndirectedEdge{b, a}; }

std::uint32_t opposite(const Tri& t, UndirectedEdge e) {
  for (auto v : t) {
    if (v != e.first && v != e.second) return v;
  }
  return t[0];
}

// Rotates t so that it reads (a, b, c) with a->b as an edge in CCW order.
Tri rotate_to(const Tri& t, std::uint32_t a) {
  if (t[0] == a) return t;
  if (t[1] == a) return {t[1], t[2], t[0]};
  return {t[2], t[0], t[1]};
}

void validate_points(std::span<const PlanarPoint> pts) {
  if (pts.size() < 3) throw Error(Errc::DegenerateInput, "triangulation needs at least three points");
  for (const auto& p : pts) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw Error(Errc::DegenerateInput, "non-finite point");
    }
  }
  std::vector<PlanarPoint> sorted(pts.begin(), pts.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const PlanarPoint& a, const PlanarPoint& b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw Error(Errc::DegenerateInput, "repeated point");
  }
  // Collinearity: farthest point from the first, then the largest offset from that line.
  const PlanarPoint a = pts[0];
  std::size_t far = 1;
  double best = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double d = std::hypot(pts[i].x - a.x, pts[i].y - a.y);
    if (d > best) best = d, far = i;
  }
  const PlanarPoint b = pts[far];
  double area = 0.0;
  for (const auto& p : pts) area = std::max(area, std::abs(orient2d(a, b, p)));
  if (area <= 1e-12 * best * best) throw Error(Errc::DegenerateInput, "all points collinear");
}

// Andrew's monotone chain keeping collinear boundary points; CCW order.
std::vector<std::uint32_t> hull_with_collinear(std::span<const PlanarPoint> pts) {
  std::vector<std::uint32_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](std::uint32_t i, std::uint32_t j) {
    return pts[i].x != pts[j].x ? pts[i].x < pts[j].x : pts[i].y < pts[j].y;
  });
  std::vector<std::uint32_t> lower, upper;
  for (auto i : idx) {
    while (lower.size() >= 2 && orient2d(pts[lower[lower.size() - 2]], pts[lower.back()], pts[i]) < 0) {
      lower.pop_back();
    }
    lower.push_back(i);
  }
  for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
    while (upper.size() >= 2 && orient2d(pts[upper[upper.size() - 2]], pts[upper.back()], pts[*it]) < 0) {
      upper.pop_back();
    }
    upper.push_back(*it);
  }
  lower.pop_back();
  upper.pop_back();
  lower.insert(lower.end(), upper.begin(), upper.end());
  return lower;
}

std::vector<Tri> bowyer_watson(std::span<const PlanarPoint> in, std::vector<PlanarPoint>& pts) {
  const std::size_t n = in.size();
  pts.assign(in.begin(), in.end());
  double minx = pts[0].x, maxx = minx, miny = pts[0].y, maxy = miny;
  for (const auto& p : pts) {
    minx = std::min(minx, p.x), maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y), maxy = std::max(maxy, p.y);
  }
  const double span = std::max(maxx - minx, maxy - miny);
  const double mx = 0.5 * (minx + maxx), my = 0.5 * (miny + maxy);
  const double big = kSuperScale * span;
  pts.push_back({mx - 3.0 * big, my - big});
  pts.push_back({mx + 3.0 * big, my - big});
  pts.push_back({mx, my + 3.0 * big});
  const auto s0 = static_cast<std::uint32_t>(n);

  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t i, std::uint32_t j) {
    return pts[i].x != pts[j].x ? pts[i].x < pts[j].x : pts[i].y < pts[j].y;
  });

  struct Open {
    Tri t;
    Circle c;
  };
  std::vector<Open> open{{Tri{s0, s0 + 1, s0 + 2}, circumcircle(pts[s0], pts[s0 + 1], pts[s0 + 2])}};
  std::vector<Tri> closed;
  std::vector<UndirectedEdge> boundary;
  std::vector<Open> keep;

  for (auto pi : order) {
    const PlanarPoint p = pts[pi];
    boundary.clear();
    keep.clear();
    for (const auto& o : open) {
      // With x-sorted insertion no later point can reach a circle left of p.
      if (o.c.cx + o.c.r * (1.0 + 1e-9) < p.x) {
        closed.push_back(o.t);
        continue;
      }
      double mag = 0.0;
      const double det = incircle(pts[o.t[0]], pts[o.t[1]], pts[o.t[2]], p, &mag);
      if (det > kInsideTol * mag) {
        for (int k = 0; k < 3; ++k) boundary.push_back(key(o.t[k], o.t[(k + 1) % 3]));
      } else {
        keep.push_back(o);
      }
    }
    std::sort(boundary.begin(), boundary.end());
    std::swap(open, keep);
    for (std::size_t i = 0; i < boundary.size();) {
      std::size_t j = i + 1;
      while (j < boundary.size() && boundary[j] == boundary[i]) ++j;
      if (j - i == 1) {
        Tri t{boundary[i].first, boundary[i].second, pi};
        if (orient2d(pts[t[0]], pts[t[1]], pts[t[2]]) < 0) std::swap(t[0], t[1]);
        open.push_back({t, circumcircle(pts[t[0]], pts[t[1]], pts[t[2]])});
      }
      i = j;
    }
  }
  for (const auto& o : open) closed.push_back(o.t);

  std::vector<Tri> real;
  for (const auto& t : closed) {
    if (t[0] < s0 && t[1] < s0 && t[2] < s0) real.push_back(t);
  }
  pts.resize(n);
  return real;
}

// Fills any region between the mesh boundary and the convex hull.
void complete_hull(const std::vector<PlanarPoint>& pts, std::vector<Tri>& tris) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
  for (const auto& t : tris) {
    for (int k = 0; k < 3; ++k) directed[{t[k], t[(k + 1) % 3]}] = 1;
  }
  std::vector<std::int64_t> next(pts.size(), -1);
  for (const auto& [e, _] : directed) {
    if (!directed.count({e.second, e.first})) next[e.first] = e.second;
  }
  const auto hull = hull_with_collinear(pts);
  for (std::size_t h = 0; h < hull.size(); ++h) {
    const std::uint32_t u = hull[h], v = hull[(h + 1) % hull.size()];
    if (next[u] == static_cast<std::int64_t>(v)) continue;
    std::vector<std::uint32_t> chain{u};
    while (chain.back() != v) {
      const auto nx = next[chain.back()];
      if (nx < 0 || chain.size() > pts.size()) {
        throw Error(Errc::InvariantViolation, "triangulation boundary is not a simple cycle");
      }
      chain.push_back(static_cast<std::uint32_t>(nx));
    }
    // Pocket polygon in CCW order: u, v, then the chain back to u.
    std::vector<std::uint32_t> poly{u, v};
    for (std::size_t i = chain.size() - 2; i >= 1; --i) poly.push_back(chain[i]);
    while (poly.size() > 3) {
      bool clipped = false;
      for (std::size_t i = 0; i < poly.size(); ++i) {
        const auto a = poly[(i + poly.size() - 1) % poly.size()], b = poly[i],
                   c = poly[(i + 1) % poly.size()];
        if (orient2d(pts[a], pts[b], pts[c]) <= 0) continue;
        bool empty = true;
        for (auto q : poly) {
          if (q == a || q == b || q == c) continue;
          if (orient2d(pts[a], pts[b], pts[q]) >= 0 && orient2d(pts[b], pts[c], pts[q]) >= 0 &&
              orient2d(pts[c], pts[a], pts[q]) >= 0) {
            empty = false;
            break;
          }
        }
        if (!empty) continue;
        tris.push_back({a, b, c});
        poly.erase(poly.begin() + static_cast<std::ptrdiff_t>(i));
        clipped = true;
        break;
      }
      if (!clipped) throw Error(Errc::InvariantViolation, "cannot close triangulation hull");
    }
    if (orient2d(pts[poly[0]], pts[poly[1]], pts[poly[2]]) > 0) tris.push_back({poly[0], poly[1], poly[2]});
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) next[chain[i]] = -1;
    next[u] = v;
  }
}

// Lawson flips: first until locally Delaunay, then the cocircular tie-break.
void legalize(const std::vector<PlanarPoint>& pts, std::vector<Tri>& tris) {
  for (int mode = 0; mode < 2; ++mode) {
    for (int pass = 0; pass < 1000; ++pass) {
      std::map<UndirectedEdge, std::vector<std::size_t>> adj;
      for (std::size_t i = 0; i < tris.size(); ++i) {
        for (int k = 0; k < 3; ++k) adj[key(tris[i][k], tris[i][(k + 1) % 3])].push_back(i);
      }
      std::vector<char> touched(tris.size(), 0);
      bool flipped = false;
      for (const auto& [e, ts] : adj) {
        if (ts.size() != 2 || touched[ts[0]] || touched[ts[1]]) continue;
        const std::uint32_t c = opposite(tris[ts[0]], e);
        const std::uint32_t d = opposite(tris[ts[1]], e);
        // t1 = (a, b, c), t2 = (b, a, d), both CCW.
        const Tri t1 = rotate_to(tris[ts[0]], c);
        const std::uint32_t a = t1[1], b = t1[2];
        double mag = 0.0;
        const double det = incircle(pts[c], pts[a], pts[b], pts[d], &mag);
        bool flip = false;
        if (mode == 0) {
          flip = det > kInsideTol * mag;
        } else if (std::abs(det) <= kCocircularTol * mag) {
          const auto lowest = std::min({a, b, c, d});
          flip = lowest == c || lowest == d;
        }
        if (!flip) continue;
        if (orient2d(pts[a], pts[d], pts[c]) <= 0 || orient2d(pts[d], pts[b], pts[c]) <= 0) continue;
        tris[ts[0]] = {a, d, c};
        tris[ts[1]] = {d, b, c};
        touched[ts[0]] = touched[ts[1]] = 1;
        flipped = true;
      }
      if (!flipped) break;
    }
  }
}

}  // namespace

double orient2d(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

double incircle(PlanarPoint a, PlanarPoint b, PlanarPoint c, PlanarPoint d, double* magnitude) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double bc = bdx * cdy - cdx * bdy;
  const double ca = cdx * ady - adx * cdy;
  const double ab = adx * bdy - bdx * ady;
  if (magnitude) {
    *magnitude = alift * (std::abs(bdx * cdy) + std::abs(cdx * bdy)) +
                 blift * (std::abs(cdx * ady) + std::abs(adx * cdy)) +
                 clift * (std::abs(adx * bdy) + std::abs(bdx * ady));
  }
  return alift * bc + blift * ca + clift * ab;
}

NetGenSpec NetGenSpec::make(double height_m, double width_m, std::size_t n_nodes, double density_pct,
                            std::uint64_t seed) {
  if (!(height_m > 0.0) || !std::isfinite(height_m)) throw Error(Errc::InvalidSpec, "height must be > 0");
  if (!(width_m > 0.0) || !std::isfinite(width_m)) throw Error(Errc::InvalidSpec, "width must be > 0");
  if (n_nodes < 3) throw Error(Errc::InvalidSpec, "at least three nodes are required");
  if (!(density_pct > 0.0 && density_pct <= 100.0)) {
    throw Error(Errc::InvalidSpec, "density must lie in (0, 100]");
  }
  if (height_m / kMetersPerDegree > 90.0 || width_m / kMetersPerDegree > 180.0) {
    throw Error(Errc::InvalidSpec, "map does not fit on the globe");
  }
  return NetGenSpec{height_m, width_m, n_nodes, density_pct, seed};
}

std::pair<GeoPoint, GeoPoint> map_corners(const NetGenSpec& spec) {
  return {GeoPoint{0.0, 0.0}, GeoPoint{spec.height_m / kMetersPerDegree, spec.width_m / kMetersPerDegree}};
}

std::vector<GeoPoint> sample_nodes(const NetGenSpec& spec, Rng& rng) {
  const auto [x1, x2] = map_corners(spec);
  std::vector<GeoPoint> out;
  out.reserve(spec.n_nodes);
  for (std::size_t i = 0; i < spec.n_nodes; ++i) {
    const double lat = rng.uniform(x1.lat, x2.lat);
    const double lon = rng.uniform(x1.lon, x2.lon);
    out.push_back({lat, lon});
  }
  return out;
}

PlanarPoint to_map_plane(const GeoPoint& p) { return {p.lon * kMetersPerDegree, p.lat * kMetersPerDegree}; }

Triangulation delaunay(std::span<const PlanarPoint> points) {
  validate_points(points);
  Triangulation out;
  auto tris = bowyer_watson(points, out.vertices);
  complete_hull(out.vertices, tris);
  legalize(out.vertices, tris);
  std::sort(tris.begin(), tris.end());
  out.triangles = std::move(tris);
  for (const auto& t : out.triangles) {
    for (int k = 0; k < 3; ++k) out.edges.push_back(key(t[k], t[(k + 1) % 3]));
  }
  std::sort(out.edges.begin(), out.edges.end());
  out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
  return out;
}

std::vector<UndirectedEdge> thin_edges(const Triangulation& tri, double density_pct, Rng& rng) {
  const std::size_t total = tri.edges.size();
  const auto target = static_cast<std::size_t>(
      std::max<long long>(0, std::llround(density_pct / 100.0 * static_cast<double>(total))));
  if (target >= total) return tri.edges;
  const std::size_t remove = total - target;
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < remove; ++i) {
    const std::size_t j = i + rng.uniform_index(total - i);
    std::swap(idx[i], idx[j]);
  }
  std::vector<char> drop(total, 0);
  for (std::size_t i = 0; i < remove; ++i) drop[idx[i]] = 1;
  std::vector<UndirectedEdge> kept;
  kept.reserve(target);
  for (std::size_t i = 0; i < total; ++i) {
    if (!drop[i]) kept.push_back(tri.edges[i]);
  }
  return kept;
}

GeneratedNetwork generate_network(const NetGenSpec& spec, const EnhanceOptions& options) {
  constexpr int kAttempts = 8;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Rng sample_rng(mix_seed(spec.seed, 2 * static_cast<std::uint64_t>(attempt)));
    Rng thin_rng(mix_seed(spec.seed, 2 * static_cast<std::uint64_t>(attempt) + 1));
    const auto geo = sample_nodes(spec, sample_rng);
    std::vector<PlanarPoint> planar;
    planar.reserve(geo.size());
    for (const auto& p : geo) planar.push_back(to_map_plane(p));
    Triangulation tri;
    try {
      tri = delaunay(planar);
    } catch (const Error& e) {
      if (e.code() == Errc::DegenerateInput) continue;
      throw;
    }
    const auto kept = thin_edges(tri, spec.density_pct, thin_rng);

    RoadGraph raw;
    for (const auto& p : geo) raw.add_node(p);
    for (const auto& [a, b] : kept) {
      raw.add_edge(a, b);
      raw.add_edge(b, a);
    }
    GeneratedNetwork out{clean_and_enhance(raw, options), {}};
    out.summary.nodes = out.graph.node_count();
    out.summary.directed_edges = out.graph.edge_count();
    out.summary.triangulated_edges = tri.edges.size();
    out.summary.kept_edges = kept.size();
    out.summary.realized_density_pct =
        100.0 * static_cast<double>(out.graph.edge_count() / 2) / static_cast<double>(tri.edges.size());
    out.summary.attempts = attempt + 1;
    return out;
  }
  throw Error(Errc::DegenerateInput, "network generation failed after 8 attempts");
}

}  // namespace roadrl
