#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "roadrl/rng.hpp"

namespace roadrl {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kDefaultSpeedLimit = 13.9;  // m/s, about 50 km/h
inline constexpr double kDefaultCurveOffset = 10.0;  // m
inline constexpr double kUTurnRadius = 1.0;          // m
inline constexpr double kCollinearArea = 1e-6;       // m^2

struct GeoPoint {
  double lat = 0.0;  // degrees
  double lon = 0.0;  // degrees

  /// Validating factory; throws InvalidSpec when out of range or non-finite.
  static GeoPoint make(double lat, double lon);

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct PlanarPoint {
  double x = 0.0;  // m, east
  double y = 0.0;  // m, north

  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

struct RoadEdge {
  NodeId from = 0;
  NodeId to = 0;
  std::optional<double> v_max;   // m/s
  std::optional<double> gcd;     // m
  std::optional<double> w_fast;  // s

  friend bool operator==(const RoadEdge&, const RoadEdge&) = default;
};

/// Circular arc joining two consecutive edges. An infinite radius marks a
/// straight pass through the shared node.
struct Curve {
  EdgeId in_edge = 0;
  EdgeId out_edge = 0;
  PlanarPoint center;  // local metres around the shared node
  double radius = std::numeric_limits<double>::infinity();
  double entry_offset = 0.0;  // m before the shared node
  double exit_offset = 0.0;   // m after the shared node

  bool straight() const { return radius == std::numeric_limits<double>::infinity(); }

  friend bool operator==(const Curve&, const Curve&) = default;
};

/// Directed road network with geo-referenced nodes and per-edge-pair curves.
class RoadGraph {
 public:
  NodeId add_node(GeoPoint p);
  EdgeId add_edge(NodeId from, NodeId to, std::optional<double> v_max = std::nullopt);

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<GeoPoint>& nodes() const { return nodes_; }
  const GeoPoint& node(NodeId id) const { return nodes_.at(id); }
  const std::vector<RoadEdge>& edges() const { return edges_; }
  const RoadEdge& edge(EdgeId id) const { return edges_.at(id); }
  RoadEdge& edge_mut(EdgeId id) {
    enhanced_ = false;
    return edges_.at(id);
  }

  std::span<const EdgeId> out_edges(NodeId id) const { return out_.at(id); }
  std::span<const EdgeId> in_edges(NodeId id) const { return in_.at(id); }

  /// Edge from -> to if one exists (lowest id when duplicated).
  std::optional<EdgeId> find_edge(NodeId from, NodeId to) const;

  /// Number of distinct neighbours ignoring direction.
  std::size_t road_degree(NodeId id) const;

  const std::map<std::pair<EdgeId, EdgeId>, Curve>& curves() const { return curves_; }
  const Curve* curve(EdgeId in, EdgeId out) const;
  void set_curve(const Curve& c);
  void clear_curves() { curves_.clear(); }

  bool enhanced() const { return enhanced_; }

  /// Checks every enhanced-graph invariant and sets the flag; throws
  /// InvariantViolation naming the first violation.
  void mark_enhanced();

  friend bool operator==(const RoadGraph& a, const RoadGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_ && a.curves_ == b.curves_ &&
           a.enhanced_ == b.enhanced_;
  }

 private:
  std::vector<GeoPoint> nodes_;
  std::vector<RoadEdge> edges_;
  std::vector<std::vector<EdgeId>> out_;
  std::vector<std::vector<EdgeId>> in_;
  std::map<std::pair<EdgeId, EdgeId>, Curve> curves_;
  bool enhanced_ = false;
};

/// Great-circle distance in metres (haversine, mean Earth radius).
double haversine_gcd(const GeoPoint& a, const GeoPoint& b);

/// Initial bearing from a to b in degrees clockwise from north, [0, 360).
double initial_bearing_deg(const GeoPoint& a, const GeoPoint& b);

/// Equirectangular projection of p into metres around origin.
PlanarPoint project_local(const GeoPoint& origin, const GeoPoint& p);

/// Subgraph induced by the largest weakly connected component. Ties go to
/// the component holding the smallest NodeId. Ids are re-densified in
/// original order. Throws EmptyGraph.
RoadGraph largest_wcc(const RoadGraph& g);

/// Number of weakly connected components (union-find).
std::size_t count_wcc(const RoadGraph& g);

RoadGraph enhance_distances(RoadGraph g);
RoadGraph enhance_speed_limits(RoadGraph g, double default_v = kDefaultSpeedLimit);
RoadGraph enhance_fastest_weights(RoadGraph g);
RoadGraph enhance_curves(RoadGraph g, double offset_cap = kDefaultCurveOffset);

struct EnhanceOptions {
  double default_speed_limit = kDefaultSpeedLimit;
  double curve_offset_cap = kDefaultCurveOffset;
};

/// Cleaning plus all four enhancement passes; the result is marked enhanced.
RoadGraph clean_and_enhance(const RoadGraph& g, const EnhanceOptions& options = {});

/// Overwrites every edge's speed limit with a uniform draw from `choices`
/// and refreshes the fastest-path weights.
RoadGraph randomize_speed_limits(RoadGraph g, std::span<const double> choices, Rng& rng);

struct CircleFit {
  bool straight = true;
  PlanarPoint center;
  double radius = std::numeric_limits<double>::infinity();
};

/// Circle through three points, or straight when the triangle they span has
/// area below kCollinearArea. Throws DegenerateTriple on repeated points.
CircleFit circle_through(PlanarPoint p1, PlanarPoint p2, PlanarPoint p3);

}  // namespace roadrl
