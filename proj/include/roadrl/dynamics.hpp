#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "roadrl/geo_graph.hpp"
#include "roadrl/routing.hpp"

namespace roadrl {

struct VehicleProps {
  double mass = 1200.0;    // kg
  double f_max = 5000.0;   // N, maximum acceleration force
  double eta = 50.0;       // friction coefficient
  double tau = 1.0;        // brake correction factor
  double length = 4.5;     // m

  /// Throws ConfigError when a bound is violated.
  void validate() const;

  friend bool operator==(const VehicleProps&, const VehicleProps&) = default;
};

struct PhysConstants {
  double T = 0.1;       // s, sampling period
  double g0 = 9.81;     // m/s^2
  double kappa = 0.8;   // static friction coefficient

  void validate() const;
};

/// Two most recent positions along the path, z = (p_t, p_{t-1}).
struct MotionState {
  double p = 0.0;
  double p_prev = 0.0;

  friend bool operator==(const MotionState&, const MotionState&) = default;
};

/// z(t+1) = A z(t) + B a, with B = (b, 0).
struct MotionModel {
  double a11, a12, a21, a22;
  double b;
};

/// Acceleration model for a in [0, 1], braking model for a in [-1, 0).
MotionModel motion_model(double a, const VehicleProps& props, const PhysConstants& k);

/// One affine update. The action is clamped to [-1, 1]; a step that would
/// move backwards stops the vehicle at p_t. Throws NumericFault on
/// non-finite input or output.
MotionState step_motion(const MotionState& s, double a, const VehicleProps& props,
                        const PhysConstants& k);

inline double velocity(const MotionState& s, const PhysConstants& k) { return (s.p - s.p_prev) / k.T; }
inline double accel_long(double prev_v, double v, const PhysConstants& k) { return (v - prev_v) / k.T; }

inline constexpr double kSensorHorizon = 200.0;  // m

struct CurveSpan {
  std::size_t node_index = 0;  // index into Route::nodes()
  double at = 0.0;             // arc position of the shared node
  double start = 0.0;
  double end = 0.0;
  double radius = 0.0;         // infinity for a straight pass

  bool straight() const { return radius == std::numeric_limits<double>::infinity(); }
};

/// Arc-length parametrisation of a path over an enhanced graph.
class Route {
 public:
  Route() = default;
  Route(const RoadGraph& g, Path path);

  const Path& path() const { return path_; }
  const std::vector<NodeId>& nodes() const { return path_.nodes; }
  double length() const { return cum_.empty() ? 0.0 : cum_.back(); }
  NodeId start() const { return path_.nodes.front(); }
  NodeId goal() const { return path_.nodes.back(); }

  /// Arc position of path node i.
  double node_arc(std::size_t i) const { return cum_.at(i); }
  bool is_intersection(std::size_t i) const { return intersection_.at(i); }

  /// Index into path().edges of the edge under arc position s. Boundaries
  /// belong to the following edge; s beyond the end maps to the last edge.
  std::size_t edge_index_at(double s) const;
  EdgeId edge_at(double s) const { return path_.edges[edge_index_at(s)]; }
  double speed_limit_at(double s) const { return v_max_[edge_index_at(s)]; }

  /// Curve spans at the interior nodes, in path order.
  const std::vector<CurveSpan>& curves() const { return spans_; }

  /// Radius of the curve whose span contains s (nearest node wins);
  /// infinity when none does.
  double radius_at(double s) const;

  /// Linear interpolation of latitude/longitude along the current edge.
  GeoPoint position_at(double s) const;
  /// Initial bearing of the current edge, degrees clockwise from north.
  double heading_at(double s) const;

 private:
  Path path_;
  std::vector<double> cum_;
  std::vector<double> v_max_;
  std::vector<GeoPoint> points_;
  std::vector<double> heading_;
  std::vector<char> intersection_;
  std::vector<CurveSpan> spans_;
};

/// v^2 / r inside a finite-radius curve span, zero elsewhere.
double accel_lat(double v, const Route& route, double s);

struct SensorReading {
  double v = 0.0;
  double v_limit = 0.0;
  double a_long = 0.0;
  double a_lat = 0.0;
  double d_next_curve = kSensorHorizon;
  double r_next_curve = kSensorHorizon;
  double d_curve_next_intersection = kSensorHorizon;
  double d_next_vehicle_same_path = kSensorHorizon;
  double d_next_vehicle_next_intersection = kSensorHorizon;

  std::array<double, 9> values() const {
    return {v, v_limit, a_long, a_lat, d_next_curve, r_next_curve, d_curve_next_intersection,
            d_next_vehicle_same_path, d_next_vehicle_next_intersection};
  }
};

/// What the sensors need to know about one vehicle.
struct VehicleView {
  const Route* route = nullptr;
  double s = 0.0;        // arc position of the front bumper
  double length = 4.5;
  double v = 0.0;
  double prev_v = 0.0;
};

/// Per-tick lookup tables over all vehicles: occupants of each edge and the
/// two closest approaching vehicles of each node within the horizon.
class TrafficIndex {
 public:
  TrafficIndex(const RoadGraph& g, std::span<const VehicleView> vehicles,
               double horizon = kSensorHorizon);

  /// Bumper-to-bumper gap to the nearest vehicle ahead on ego's remaining
  /// path, capped at the horizon.
  double gap_ahead(std::size_t ego) const;

  /// Smallest path distance of any vehicle other than ego to node n, or
  /// infinity when none is within the horizon.
  double nearest_other(NodeId n, std::size_t ego) const;

  double horizon() const { return horizon_; }

 private:
  struct Occupant {
    double offset;  // front bumper position along the edge
    double length;
    std::size_t id;
  };
  struct Approach {
    double dist = std::numeric_limits<double>::infinity();
    std::size_t id = static_cast<std::size_t>(-1);
  };

  std::span<const VehicleView> vehicles_;
  double horizon_;
  double max_length_ = 0.0;
  std::unordered_map<EdgeId, std::vector<Occupant>> on_edge_;
  std::unordered_map<NodeId, std::array<Approach, 2>> approach_;
};

SensorReading read_sensors(std::size_t ego, std::span<const VehicleView> vehicles,
                           const TrafficIndex& traffic, const PhysConstants& k);

}  // namespace roadrl
