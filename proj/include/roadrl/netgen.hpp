#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "roadrl/geo_graph.hpp"
#include "roadrl/rng.hpp"

namespace roadrl {

inline constexpr double kMetersPerDegree = 111'320.0;

/// Parameters of an artificial network; bounds are enforced by make().
struct NetGenSpec {
  double height_m = 0.0;
  double width_m = 0.0;
  std::size_t n_nodes = 0;
  double density_pct = 100.0;
  std::uint64_t seed = 0;

  static NetGenSpec make(double height_m, double width_m, std::size_t n_nodes,
                         double density_pct, std::uint64_t seed);
};

using UndirectedEdge = std::pair<std::uint32_t, std::uint32_t>;  // first < second

struct Triangulation {
  std::vector<PlanarPoint> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;  // counter-clockwise
  std::vector<UndirectedEdge> edges;                    // sorted, unique
};

/// Southwest and northeast corners of the map, anchored at (0, 0).
std::pair<GeoPoint, GeoPoint> map_corners(const NetGenSpec& spec);

std::vector<GeoPoint> sample_nodes(const NetGenSpec& spec, Rng& rng);

/// Delaunay triangulation (incremental Bowyer-Watson). Cocircular quads use
/// the diagonal incident to the lowest vertex index. Throws DegenerateInput
/// for fewer than three points, repeated points, or all points collinear.
Triangulation delaunay(std::span<const PlanarPoint> points);

/// Keeps round(density/100 * |E'|) edges (half away from zero), removing the
/// rest uniformly without replacement. Survivors keep their input order.
std::vector<UndirectedEdge> thin_edges(const Triangulation& tri, double density_pct, Rng& rng);

struct GenerationSummary {
  std::size_t nodes = 0;
  std::size_t directed_edges = 0;
  std::size_t triangulated_edges = 0;  // |E'|
  std::size_t kept_edges = 0;          // after thinning, before cleaning
  double realized_density_pct = 0.0;   // roads after cleaning relative to |E'|
  int attempts = 0;
};

struct GeneratedNetwork {
  RoadGraph graph;
  GenerationSummary summary;
};

/// Full pipeline: corners, sampling, triangulation, thinning, two-way
/// expansion, cleaning and enhancement. Pure function of the spec.
GeneratedNetwork generate_network(const NetGenSpec& spec, const EnhanceOptions& options = {});

inline RoadGraph generate(const NetGenSpec& spec) { return generate_network(spec).graph; }

/// Planar metres used for triangulation of geo points on the artificial map.
PlanarPoint to_map_plane(const GeoPoint& p);

/// Incircle determinant for counter-clockwise (a, b, c); positive when d is
/// strictly inside. `magnitude` receives the permanent used for tolerances.
double incircle(PlanarPoint a, PlanarPoint b, PlanarPoint c, PlanarPoint d,
                double* magnitude = nullptr);

double orient2d(PlanarPoint a, PlanarPoint b, PlanarPoint c);

}  // namespace roadrl
