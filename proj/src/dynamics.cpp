#include "roadrl/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "roadrl/error.hpp"

namespace roadrl {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(Errc::ConfigError, what);
}

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void VehicleProps::validate() const {
  require(finite_positive(mass), "vehicle mass must be positive");
  require(finite_positive(f_max), "vehicle maximum force must be positive");
  require(std::isfinite(eta) && eta >= 0.0, "vehicle friction coefficient must be non-negative");
  require(finite_positive(tau), "vehicle brake correction must be positive");
  require(finite_positive(length), "vehicle length must be positive");
}

void PhysConstants::validate() const {
  require(finite_positive(T), "sampling period must be positive");
  require(finite_positive(g0), "gravitation must be positive");
  require(finite_positive(kappa), "static friction coefficient must be positive");
}

MotionModel motion_model(double a, const VehicleProps& props, const PhysConstants& k) {
  const double m = props.mass;
  const double eta_t = props.eta * k.T;
  const double denom = eta_t + m;
  MotionModel mm;
  mm.a11 = (eta_t + 2.0 * m) / denom;
  mm.a12 = -m / denom;
  mm.a21 = 1.0;
  mm.a22 = 0.0;
  if (a >= 0.0) {
    mm.b = props.f_max * k.T * k.T / denom;
  } else {
    mm.b = k.T * k.T * k.g0 * k.kappa * props.tau * m / denom;
  }
  return mm;
}

MotionState step_motion(const MotionState& s, double a, const VehicleProps& props,
                        const PhysConstants& k) {
  if (!std::isfinite(s.p) || !std::isfinite(s.p_prev) || !std::isfinite(a)) {
    throw Error(Errc::NumericFault, "non-finite motion input");
  }
  a = std::clamp(a, -1.0, 1.0);
  const MotionModel mm = motion_model(a, props, k);
  MotionState next;
  // Row one of A regrouped as p + (-a12)(p - p_prev): same product, but the
  // rounding error scales with the step instead of the absolute position,
  // and rest stays rest exactly.
  next.p = s.p + (-mm.a12) * (s.p - s.p_prev) + mm.b * a;
  next.p_prev = s.p;
  if (!std::isfinite(next.p)) throw Error(Errc::NumericFault, "non-finite position after motion step");
  if (next.p < s.p) next = MotionState{s.p, s.p};
  return next;
}

Route::Route(const RoadGraph& g, Path path) : path_(std::move(path)) {
  if (path_.edges.empty() || path_.nodes.size() != path_.edges.size() + 1) {
    throw Error(Errc::InvariantViolation, "route needs at least one edge");
  }
  const std::size_t m = path_.edges.size();
  cum_.assign(m + 1, 0.0);
  v_max_.resize(m);
  heading_.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const RoadEdge& e = g.edge(path_.edges[i]);
    if (!e.gcd || !e.v_max) throw Error(Errc::NotEnhanced, "route over an edge without distance or limit");
    cum_[i + 1] = cum_[i] + *e.gcd;
    v_max_[i] = *e.v_max;
    heading_[i] = initial_bearing_deg(g.node(e.from), g.node(e.to));
  }
  points_.reserve(m + 1);
  intersection_.reserve(m + 1);
  for (NodeId n : path_.nodes) {
    points_.push_back(g.node(n));
    intersection_.push_back(g.road_degree(n) >= 3 ? 1 : 0);
  }
  spans_.reserve(m > 0 ? m - 1 : 0);
  for (std::size_t i = 1; i < m; ++i) {
    CurveSpan span;
    span.node_index = i;
    span.at = cum_[i];
    span.radius = kInf;
    span.start = span.end = span.at;
    if (const Curve* c = g.curve(path_.edges[i - 1], path_.edges[i])) {
      span.radius = c->radius;
      span.start = span.at - c->entry_offset;
      span.end = span.at + c->exit_offset;
    }
    spans_.push_back(span);
  }
}

std::size_t Route::edge_index_at(double s) const {
  const auto first = cum_.begin() + 1;
  const auto last = cum_.end() - 1;
  return static_cast<std::size_t>(std::upper_bound(first, last, s) - first);
}

double Route::radius_at(double s) const {
  double best_radius = kInf;
  double best_dist = kInf;
  for (const auto& span : spans_) {
    if (span.start > s) break;
    if (s <= span.end) {
      const double d = std::abs(s - span.at);
      if (d < best_dist) {
        best_dist = d;
        best_radius = span.radius;
      }
    }
  }
  return best_radius;
}

GeoPoint Route::position_at(double s) const {
  const std::size_t i = edge_index_at(s);
  const double len = cum_[i + 1] - cum_[i];
  const double t = std::clamp((s - cum_[i]) / len, 0.0, 1.0);
  const GeoPoint& a = points_[i];
  const GeoPoint& b = points_[i + 1];
  return GeoPoint{a.lat + t * (b.lat - a.lat), a.lon + t * (b.lon - a.lon)};
}

double Route::heading_at(double s) const { return heading_[edge_index_at(s)]; }

double accel_lat(double v, const Route& route, double s) {
  const double r = route.radius_at(s);
  if (r == kInf || v == 0.0) return 0.0;
  return v * v / r;
}

TrafficIndex::TrafficIndex(const RoadGraph&, std::span<const VehicleView> vehicles, double horizon)
    : vehicles_(vehicles), horizon_(horizon) {
  for (std::size_t id = 0; id < vehicles.size(); ++id) {
    const VehicleView& v = vehicles[id];
    const Route& r = *v.route;
    max_length_ = std::max(max_length_, v.length);
    const std::size_t k = r.edge_index_at(v.s);
    on_edge_[r.path().edges[k]].push_back(Occupant{v.s - r.node_arc(k), v.length, id});
    for (std::size_t i = k; i < r.nodes().size(); ++i) {
      const double d = r.node_arc(i) - v.s;
      if (d < 0.0) continue;
      if (d > horizon_) break;
      auto& slots = approach_[r.nodes()[i]];
      if (d < slots[0].dist) {
        slots[1] = slots[0];
        slots[0] = Approach{d, id};
      } else if (d < slots[1].dist) {
        slots[1] = Approach{d, id};
      }
    }
  }
}

double TrafficIndex::gap_ahead(std::size_t ego) const {
  const VehicleView& me = vehicles_[ego];
  const Route& r = *me.route;
  double best = horizon_;
  for (std::size_t j = r.edge_index_at(me.s); j < r.path().edges.size(); ++j) {
    const double base = r.node_arc(j);
    if (base - me.s - max_length_ > best) break;
    const auto it = on_edge_.find(r.path().edges[j]);
    if (it == on_edge_.end()) continue;
    for (const Occupant& o : it->second) {
      if (o.id == ego) continue;
      const double front = base + o.offset;
      if (front <= me.s) continue;
      best = std::min(best, std::max(0.0, front - o.length - me.s));
    }
  }
  return best;
}

double TrafficIndex::nearest_other(NodeId n, std::size_t ego) const {
  const auto it = approach_.find(n);
  if (it == approach_.end()) return kInf;
  for (const Approach& a : it->second) {
    if (a.id != ego) return a.dist;
  }
  return kInf;
}

SensorReading read_sensors(std::size_t ego, std::span<const VehicleView> vehicles,
                           const TrafficIndex& traffic, const PhysConstants& k) {
  const VehicleView& me = vehicles[ego];
  const Route& r = *me.route;
  const double H = traffic.horizon();
  SensorReading out;
  out.v = me.v;
  out.v_limit = r.speed_limit_at(me.s);
  out.a_long = accel_long(me.prev_v, me.v, k);
  out.a_lat = accel_lat(me.v, r, me.s);

  for (const auto& span : r.curves()) {
    if (span.straight() || span.end <= me.s) continue;
    const double d = std::max(0.0, span.start - me.s);
    if (d <= H) {
      out.d_next_curve = d;
      out.r_next_curve = span.radius;
    }
    break;
  }

  const auto& nodes = r.nodes();
  for (std::size_t i = r.edge_index_at(me.s); i < nodes.size(); ++i) {
    const double d_node = r.node_arc(i) - me.s;
    if (d_node < 0.0 || !r.is_intersection(i)) continue;
    if (d_node > H) break;
    const bool interior = i > 0 && i + 1 < nodes.size();
    const double d_curve = interior ? std::max(0.0, r.curves()[i - 1].start - me.s) : d_node;
    out.d_curve_next_intersection = std::min(H, d_curve);
    out.d_next_vehicle_next_intersection = std::min(H, d_node + traffic.nearest_other(nodes[i], ego));
    break;
  }

  out.d_next_vehicle_same_path = traffic.gap_ahead(ego);
  return out;
}

}  // namespace roadrl
