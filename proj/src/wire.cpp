#include "roadrl/wire.hpp"

namespace roadrl {

using nlohmann::json;

json network_to_wire(const RoadGraph& g) {
  json nodes = json::array();
  for (NodeId i = 0; i < g.node_count(); ++i) {
    nodes.push_back({{"id", i}, {"lat", g.node(i).lat}, {"lon", g.node(i).lon}});
  }
  json edges = json::array();
  for (EdgeId i = 0; i < g.edge_count(); ++i) {
    const auto& e = g.edge(i);
    edges.push_back({{"id", i},
                     {"from", e.from},
                     {"to", e.to},
                     {"v_max", e.v_max ? json(*e.v_max) : json(nullptr)},
                     {"gcd", e.gcd ? json(*e.gcd) : json(nullptr)}});
  }
  return {{"v", kWireVersion}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

json stats_to_wire(const StatSeries& s) {
  return {{"v", kWireVersion},       {"vehicle", s.vehicle}, {"actions", s.actions}, {"velocities", s.velocities},
          {"a_long", s.a_long},     {"a_lat", s.a_lat},     {"rewards", s.rewards}};
}

json snapshot_to_wire(const SimSnapshot& s) {
  json vehicles = json::array();
  for (const auto& v : s.vehicles) {
    vehicles.push_back({{"id", v.id},
                        {"lat", v.pos.lat},
                        {"lon", v.pos.lon},
                        {"heading_deg", v.heading_deg},
                        {"color_frac", v.color_frac},
                        {"v", v.v},
                        {"v_limit", v.v_limit}});
  }
  return {{"v", kWireVersion},
          {"tick", s.tick},
          {"agent_steps", s.agent_steps},
          {"flags", {{"training", s.training}, {"exploration", s.exploration}, {"paused", s.paused}}},
          {"vehicles", std::move(vehicles)},
          {"stats", s.selected ? stats_to_wire(*s.selected) : json(nullptr)}};
}

json error_to_wire(int status, const std::string& message) {
  return {{"v", kWireVersion}, {"error", {{"status", status}, {"message", message}}}};
}

}  // namespace roadrl
