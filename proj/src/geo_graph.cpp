#include "roadrl/geo_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <string>

#include "roadrl/error.hpp"

namespace roadrl {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr std::size_t kMaxChainEdges = 8;

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

double norm(PlanarPoint p) { return std::hypot(p.x, p.y); }

double cross(PlanarPoint a, PlanarPoint b) { return a.x * b.y - a.y * b.x; }

PlanarPoint sub(PlanarPoint a, PlanarPoint b) { return {a.x - b.x, a.y - b.y}; }

/// -1, 0 or +1 for right turn, straight, left turn going a -> b -> c.
int turn_sign(PlanarPoint a, PlanarPoint b, PlanarPoint c) {
  const PlanarPoint u = sub(b, a);
  const PlanarPoint v = sub(c, b);
  const double scale = norm(u) * norm(v);
  if (scale == 0.0) return 0;
  const double s = cross(u, v) / scale;
  if (std::abs(s) < 1e-9) return 0;
  return s > 0 ? 1 : -1;
}

/// Point at arc length `dist` along a polyline starting at pts[0].
PlanarPoint point_along(const std::vector<PlanarPoint>& pts, double dist) {
  double remaining = dist;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const PlanarPoint seg = sub(pts[i], pts[i - 1]);
    const double len = norm(seg);
    if (len >= remaining || i + 1 == pts.size()) {
      const double t = len > 0.0 ? std::min(1.0, remaining / len) : 0.0;
      return {pts[i - 1].x + t * seg.x, pts[i - 1].y + t * seg.y};
    }
    remaining -= len;
  }
  return pts.back();
}

double require(const std::optional<double>& v, EdgeId id, const char* what) {
  if (!v) {
    throw Error(Errc::NotEnhanced, std::string("edge ") + std::to_string(id) + " has no " + what);
  }
  return *v;
}

/// Polyline walked away from the shared node along a chain of short edges
/// through shape nodes (road degree 2) whose turns keep one direction.
struct Chain {
  std::vector<PlanarPoint> points;  // starts at the shared node
  double length = 0.0;              // sum of edge gcd values
};

class CurveBuilder {
 public:
  CurveBuilder(const RoadGraph& g, double cap) : g_(g), cap_(cap) {}

  Curve build(EdgeId in_id, EdgeId out_id) const {
    const RoadEdge& in = g_.edge(in_id);
    const RoadEdge& out = g_.edge(out_id);
    const double len_in = require(in.gcd, in_id, "distance");
    const double len_out = require(out.gcd, out_id, "distance");
    const NodeId shared = in.to;
    const GeoPoint& origin = g_.node(shared);

    Curve c;
    c.in_edge = in_id;
    c.out_edge = out_id;

    if (out.to == in.from) {
      const double o = std::min({cap_, len_in / 2.0, len_out / 2.0});
      c.radius = kUTurnRadius;
      c.entry_offset = o;
      c.exit_offset = o;
      return c;
    }

    int sign = turn_sign(project_local(origin, g_.node(in.from)), PlanarPoint{},
                         project_local(origin, g_.node(out.to)));
    const Chain back = walk(origin, in_id, /*backward=*/true, sign);
    const Chain fwd = walk(origin, out_id, /*backward=*/false, sign);

    const double o = std::min({cap_, back.length / 2.0, fwd.length / 2.0});
    const CircleFit fit =
        circle_through(point_along(back.points, o), PlanarPoint{}, point_along(fwd.points, o));
    c.radius = fit.radius;
    if (!fit.straight) c.center = fit.center;
    c.entry_offset = std::min(o, len_in);
    c.exit_offset = std::min(o, len_out);
    return c;
  }

 private:
  Chain walk(const GeoPoint& origin, EdgeId first, bool backward, int& sign) const {
    Chain chain;
    chain.points.push_back(PlanarPoint{});
    const NodeId shared = backward ? g_.edge(first).to : g_.edge(first).from;
    EdgeId cur = first;
    std::set<NodeId> seen{shared};
    for (std::size_t step = 0; step < kMaxChainEdges; ++step) {
      const RoadEdge& e = g_.edge(cur);
      const NodeId far = backward ? e.from : e.to;
      const NodeId near = backward ? e.to : e.from;
      chain.points.push_back(project_local(origin, g_.node(far)));
      chain.length += *e.gcd;
      if (*e.gcd >= 2.0 * cap_ || !seen.insert(far).second) break;
      if (g_.road_degree(far) != 2) break;

      // Continue onto the edge that joins `far` to its other neighbour.
      std::optional<EdgeId> next;
      const auto candidates = backward ? g_.in_edges(far) : g_.out_edges(far);
      for (EdgeId cand : candidates) {
        const RoadEdge& ce = g_.edge(cand);
        const NodeId other = backward ? ce.from : ce.to;
        if (other != near && ce.gcd) {
          next = cand;
          break;
        }
      }
      if (!next) break;
      const RoadEdge& ne = g_.edge(*next);
      const NodeId beyond = backward ? ne.from : ne.to;
      const PlanarPoint p_near = project_local(origin, g_.node(near));
      const PlanarPoint p_far = project_local(origin, g_.node(far));
      const PlanarPoint p_beyond = project_local(origin, g_.node(beyond));
      const int s = backward ? turn_sign(p_beyond, p_far, p_near) : turn_sign(p_near, p_far, p_beyond);
      if (s != 0 && sign != 0 && s != sign) break;
      if (sign == 0) sign = s;
      cur = *next;
    }
    return chain;
  }

  const RoadGraph& g_;
  double cap_;
};

}  // namespace

GeoPoint GeoPoint::make(double lat, double lon) {
  if (!std::isfinite(lat) || !std::isfinite(lon) || lat < -90.0 || lat > 90.0 || lon < -180.0 ||
      lon > 180.0) {
    throw Error(Errc::InvalidSpec, "coordinate out of range: (" + std::to_string(lat) + ", " +
                                       std::to_string(lon) + ")");
  }
  return GeoPoint{lat, lon};
}

NodeId RoadGraph::add_node(GeoPoint p) {
  nodes_.push_back(p);
  out_.emplace_back();
  in_.emplace_back();
  enhanced_ = false;
  return static_cast<NodeId>(nodes_.size() - 1);
}

EdgeId RoadGraph::add_edge(NodeId from, NodeId to, std::optional<double> v_max) {
  if (from >= nodes_.size() || to >= nodes_.size()) {
    throw Error(Errc::InvariantViolation, "edge endpoint out of range");
  }
  if (from == to) throw Error(Errc::InvariantViolation, "self-loop edge");
  const auto id = static_cast<EdgeId>(edges_.size());
  edges_.push_back(RoadEdge{from, to, v_max, std::nullopt, std::nullopt});
  out_[from].push_back(id);
  in_[to].push_back(id);
  enhanced_ = false;
  return id;
}

std::optional<EdgeId> RoadGraph::find_edge(NodeId from, NodeId to) const {
  for (EdgeId e : out_.at(from)) {
    if (edges_[e].to == to) return e;
  }
  return std::nullopt;
}

std::size_t RoadGraph::road_degree(NodeId id) const {
  std::vector<NodeId> nbrs;
  for (EdgeId e : out_.at(id)) nbrs.push_back(edges_[e].to);
  for (EdgeId e : in_.at(id)) nbrs.push_back(edges_[e].from);
  std::sort(nbrs.begin(), nbrs.end());
  return static_cast<std::size_t>(std::unique(nbrs.begin(), nbrs.end()) - nbrs.begin());
}

const Curve* RoadGraph::curve(EdgeId in, EdgeId out) const {
  const auto it = curves_.find({in, out});
  return it == curves_.end() ? nullptr : &it->second;
}

void RoadGraph::set_curve(const Curve& c) {
  curves_[{c.in_edge, c.out_edge}] = c;
  enhanced_ = false;
}

void RoadGraph::mark_enhanced() {
  auto fail = [](const std::string& what) { throw Error(Errc::InvariantViolation, what); };
  for (const auto& p : nodes_) {
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || std::abs(p.lat) > 90.0 ||
        std::abs(p.lon) > 180.0) {
      fail("node coordinate out of range");
    }
  }
  for (EdgeId id = 0; id < edges_.size(); ++id) {
    const RoadEdge& e = edges_[id];
    const std::string tag = "edge " + std::to_string(id);
    if (e.from >= nodes_.size() || e.to >= nodes_.size()) fail(tag + " references a missing node");
    if (e.from == e.to) fail(tag + " is a self-loop");
    if (!e.v_max || !e.gcd || !e.w_fast) fail(tag + " lacks derived fields");
    if (!(*e.v_max > 0.0) || !(*e.gcd > 0.0) || !(*e.w_fast > 0.0) || !std::isfinite(*e.v_max) ||
        !std::isfinite(*e.gcd) || !std::isfinite(*e.w_fast)) {
      fail(tag + " has a non-positive derived field");
    }
    if (std::abs(*e.w_fast * *e.v_max - *e.gcd) >= 1e-9 * *e.gcd) {
      fail(tag + " weight is not distance over speed limit");
    }
  }
  std::size_t expected = 0;
  for (EdgeId id = 0; id < edges_.size(); ++id) {
    for (EdgeId out : out_[edges_[id].to]) {
      ++expected;
      const Curve* c = curve(id, out);
      if (!c) fail("missing curve for edge pair " + std::to_string(id) + "->" + std::to_string(out));
    }
  }
  if (expected != curves_.size()) fail("curve for an edge pair that shares no node");
  for (const auto& [key, c] : curves_) {
    if (c.in_edge != key.first || c.out_edge != key.second) fail("curve key mismatch");
    if (!(c.radius > 0.0)) fail("curve radius must be positive");
    if (!(c.entry_offset >= 0.0) || c.entry_offset > *edges_[c.in_edge].gcd ||
        !(c.exit_offset >= 0.0) || c.exit_offset > *edges_[c.out_edge].gcd) {
      fail("curve offsets exceed edge lengths");
    }
  }
  enhanced_ = true;
}

double haversine_gcd(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  const double h = std::min(1.0, s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

double initial_bearing_deg(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dlambda = (b.lon - a.lon) * kDegToRad;
  const double y = std::sin(dlambda) * std::cos(phi2);
  const double x = std::cos(phi1) * std::sin(phi2) - std::sin(phi1) * std::cos(phi2) * std::cos(dlambda);
  const double deg = std::atan2(y, x) / kDegToRad;
  return deg < 0.0 ? deg + 360.0 : deg;
}

PlanarPoint project_local(const GeoPoint& origin, const GeoPoint& p) {
  const double lat0 = origin.lat * kDegToRad;
  return PlanarPoint{kEarthRadiusM * (p.lon - origin.lon) * kDegToRad * std::cos(lat0),
                     kEarthRadiusM * (p.lat - origin.lat) * kDegToRad};
}

std::size_t count_wcc(const RoadGraph& g) {
  DisjointSets sets(g.node_count());
  for (const auto& e : g.edges()) sets.unite(e.from, e.to);
  std::size_t n = 0;
  for (std::size_t i = 0; i < g.node_count(); ++i) n += sets.find(i) == i ? 1 : 0;
  return n;
}

RoadGraph largest_wcc(const RoadGraph& g) {
  if (g.node_count() == 0) throw Error(Errc::EmptyGraph, "graph has no nodes");
  DisjointSets sets(g.node_count());
  for (const auto& e : g.edges()) sets.unite(e.from, e.to);

  // Roots are the smallest NodeId of their component, so scanning ids in
  // ascending order and keeping strictly larger counts applies the tie-break.
  std::vector<std::size_t> size(g.node_count(), 0);
  for (std::size_t i = 0; i < g.node_count(); ++i) ++size[sets.find(i)];
  std::size_t best = 0;
  for (std::size_t i = 1; i < g.node_count(); ++i) {
    if (size[i] > size[best]) best = i;
  }

  RoadGraph out;
  constexpr NodeId kDropped = std::numeric_limits<NodeId>::max();
  std::vector<NodeId> node_map(g.node_count(), kDropped);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (sets.find(i) == best) node_map[i] = out.add_node(g.nodes()[i]);
  }
  std::vector<EdgeId> edge_map(g.edge_count(), std::numeric_limits<EdgeId>::max());
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const RoadEdge& e = g.edge(id);
    if (node_map[e.from] == kDropped) continue;
    const EdgeId nid = out.add_edge(node_map[e.from], node_map[e.to], e.v_max);
    RoadEdge& ne = out.edge_mut(nid);
    ne.gcd = e.gcd;
    ne.w_fast = e.w_fast;
    edge_map[id] = nid;
  }
  for (const auto& [key, c] : g.curves()) {
    if (edge_map[key.first] == std::numeric_limits<EdgeId>::max()) continue;
    Curve nc = c;
    nc.in_edge = edge_map[key.first];
    nc.out_edge = edge_map[key.second];
    out.set_curve(nc);
  }
  if (g.enhanced()) out.mark_enhanced();
  return out;
}

RoadGraph enhance_distances(RoadGraph g) {
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const RoadEdge& e = g.edge(id);
    const double d = haversine_gcd(g.node(e.from), g.node(e.to));
    if (!(d > 0.0)) {
      throw Error(Errc::DegenerateEdge, "edge " + std::to_string(id) + " has coincident endpoints");
    }
    g.edge_mut(id).gcd = d;
  }
  return g;
}

RoadGraph enhance_speed_limits(RoadGraph g, double default_v) {
  if (!(default_v > 0.0) || !std::isfinite(default_v)) {
    throw Error(Errc::InvalidDefault, "default speed limit must be positive, got " +
                                          std::to_string(default_v));
  }
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    if (!g.edge(id).v_max) g.edge_mut(id).v_max = default_v;
  }
  return g;
}

RoadGraph enhance_fastest_weights(RoadGraph g) {
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const RoadEdge& e = g.edge(id);
    const double d = require(e.gcd, id, "distance");
    const double v = require(e.v_max, id, "speed limit");
    if (!(v > 0.0)) {
      throw Error(Errc::InvariantViolation, "edge " + std::to_string(id) + " speed limit <= 0");
    }
    g.edge_mut(id).w_fast = d / v;
  }
  return g;
}

RoadGraph enhance_curves(RoadGraph g, double offset_cap) {
  for (EdgeId id = 0; id < g.edge_count(); ++id) require(g.edge(id).gcd, id, "distance");
  g.clear_curves();
  const CurveBuilder builder(g, offset_cap);
  std::vector<Curve> built;
  for (EdgeId in = 0; in < g.edge_count(); ++in) {
    for (EdgeId out : g.out_edges(g.edge(in).to)) built.push_back(builder.build(in, out));
  }
  for (const auto& c : built) g.set_curve(c);
  return g;
}

RoadGraph clean_and_enhance(const RoadGraph& g, const EnhanceOptions& options) {
  RoadGraph out = largest_wcc(g);
  out = enhance_distances(std::move(out));
  out = enhance_speed_limits(std::move(out), options.default_speed_limit);
  out = enhance_fastest_weights(std::move(out));
  out = enhance_curves(std::move(out), options.curve_offset_cap);
  out.mark_enhanced();
  return out;
}

RoadGraph randomize_speed_limits(RoadGraph g, std::span<const double> choices, Rng& rng) {
  if (choices.empty()) throw Error(Errc::InvalidDefault, "no speed limit choices given");
  for (double v : choices) {
    if (!(v > 0.0)) throw Error(Errc::InvalidDefault, "speed limit choices must be positive");
  }
  const bool was_enhanced = g.enhanced();
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    RoadEdge& e = g.edge_mut(id);
    e.v_max = choices[rng.uniform_index(choices.size())];
    if (e.gcd) e.w_fast = *e.gcd / *e.v_max;
  }
  if (was_enhanced) g.mark_enhanced();
  return g;
}

CircleFit circle_through(PlanarPoint p1, PlanarPoint p2, PlanarPoint p3) {
  if (p1 == p2 || p2 == p3 || p1 == p3) {
    throw Error(Errc::DegenerateTriple, "circle through repeated points");
  }
  // Work relative to p2 for precision.
  const PlanarPoint a = sub(p1, p2);
  const PlanarPoint c = sub(p3, p2);
  const double twice_area = cross(a, c);
  if (std::abs(twice_area) / 2.0 < kCollinearArea) return CircleFit{};
  const double d = 2.0 * twice_area;
  const double a2 = a.x * a.x + a.y * a.y;
  const double c2 = c.x * c.x + c.y * c.y;
  const double ux = (c.y * a2 - a.y * c2) / d;
  const double uy = (a.x * c2 - c.x * a2) / d;
  CircleFit fit;
  fit.straight = false;
  fit.center = PlanarPoint{p2.x + ux, p2.y + uy};
  fit.radius = std::hypot(ux, uy);
  return fit;
}

}  // namespace roadrl
