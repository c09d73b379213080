#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "roadrl/geo_graph.hpp"

namespace roadrl {

enum class PathMode { Shortest, Fastest };

std::string_view path_mode_name(PathMode m);
PathMode path_mode_from_name(std::string_view name);  // "shortest" | "fastest"

struct Path {
  std::vector<NodeId> nodes;
  std::vector<EdgeId> edges;
  double total_cost = 0.0;  // metres or seconds
};

/// Shortest -> gcd, Fastest -> w_fast. Throws NotEnhanced when absent.
double mode_weight(const RoadEdge& e, PathMode mode);

/// Dijkstra over explicit per-edge weights (indexed by EdgeId). Binary heap
/// with lazy deletion; equal tentative costs settle the lower NodeId first.
/// Returns nullopt when the goal is unreachable. Throws SameNode and
/// InvalidWeight.
std::optional<Path> dijkstra_weighted(const RoadGraph& g, NodeId start, NodeId goal,
                                      std::span<const double> weights);

std::optional<Path> dijkstra(const RoadGraph& g, NodeId start, NodeId goal, PathMode mode);

}  // namespace roadrl
