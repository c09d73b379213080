#pragma once

#include <nlohmann/json.hpp>

#include "roadrl/geo_graph.hpp"
#include "roadrl/sim.hpp"

namespace roadrl {

inline constexpr int kWireVersion = 1;

/// {"v":1,"nodes":[{"id","lat","lon"}],"edges":[{"id","from","to","v_max","gcd"}]}
nlohmann::json network_to_wire(const RoadGraph& g);

/// {"v":1,"tick","agent_steps","flags":{"training","exploration","paused"},
///  "vehicles":[{"id","lat","lon","heading_deg","color_frac","v","v_limit"}],
///  "stats":{...} or null}
nlohmann::json snapshot_to_wire(const SimSnapshot& s);

/// {"v":1,"vehicle","actions","velocities","a_long","a_lat","rewards"}
nlohmann::json stats_to_wire(const StatSeries& s);

nlohmann::json error_to_wire(int status, const std::string& message);

}  // namespace roadrl
