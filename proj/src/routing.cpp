#include "roadrl/routing.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <string>

#include "roadrl/error.hpp"

namespace roadrl {

std::string_view path_mode_name(PathMode m) { return m == PathMode::Shortest ? "shortest" : "fastest"; }

PathMode path_mode_from_name(std::string_view name) {
  if (name == "shortest") return PathMode::Shortest;
  if (name == "fastest") return PathMode::Fastest;
  throw Error(Errc::ConfigError, "unknown path mode '" + std::string(name) + "'");
}

double mode_weight(const RoadEdge& e, PathMode mode) {
  const auto& w = mode == PathMode::Shortest ? e.gcd : e.w_fast;
  if (!w) throw Error(Errc::NotEnhanced, "edge lacks its routing weight");
  return *w;
}

std::optional<Path> dijkstra_weighted(const RoadGraph& g, NodeId start, NodeId goal,
                                      std::span<const double> weights) {
  if (start >= g.node_count() || goal >= g.node_count()) {
    throw Error(Errc::InvariantViolation, "route endpoint out of range");
  }
  if (start == goal) throw Error(Errc::SameNode, "start and goal are the same node");
  if (weights.size() != g.edge_count()) {
    throw Error(Errc::InvariantViolation, "one weight per edge required");
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr EdgeId kNone = std::numeric_limits<EdgeId>::max();
  std::vector<double> dist(g.node_count(), kInf);
  std::vector<EdgeId> via(g.node_count(), kNone);
  std::vector<char> settled(g.node_count(), 0);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[start] = 0.0;
  heap.push({0.0, start});

  while (!heap.empty()) {
    const auto [d, u] = heap.top();
    heap.pop();
    if (settled[u]) continue;
    settled[u] = 1;
    if (u == goal) break;
    for (EdgeId e : g.out_edges(u)) {
      const double w = weights[e];
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw Error(Errc::InvalidWeight, "edge " + std::to_string(e) + " has weight " + std::to_string(w));
      }
      const NodeId v = g.edge(e).to;
      if (settled[v]) continue;
      const double nd = d + w;
      if (nd < dist[v]) {
        dist[v] = nd;
        via[v] = e;
        heap.push({nd, v});
      }
    }
  }
  if (!settled[goal]) return std::nullopt;

  Path p;
  p.total_cost = dist[goal];
  for (NodeId v = goal; v != start; v = g.edge(via[v]).from) {
    p.nodes.push_back(v);
    p.edges.push_back(via[v]);
  }
  p.nodes.push_back(start);
  std::reverse(p.nodes.begin(), p.nodes.end());
  std::reverse(p.edges.begin(), p.edges.end());
  return p;
}

std::optional<Path> dijkstra(const RoadGraph& g, NodeId start, NodeId goal, PathMode mode) {
  std::vector<double> w(g.edge_count());
  for (EdgeId e = 0; e < g.edge_count(); ++e) w[e] = mode_weight(g.edge(e), mode);
  return dijkstra_weighted(g, start, goal, w);
}

}  // namespace roadrl
