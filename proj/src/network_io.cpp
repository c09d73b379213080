#include "roadrl/network_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "roadrl/error.hpp"

namespace roadrl {

namespace {

void append_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
  // Keep integral values as JSON floats so that -0.0 survives parsing.
  if (std::string_view(buf).find_first_of(".e") == std::string_view::npos) out += ".0";
}

void append_field(std::string& out, const char* key, double v) {
  out += '"';
  out += key;
  out += "\":";
  append_double(out, v);
}

double number(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(Errc::InvariantViolation, std::string("missing numeric field '") + key + "'");
  }
  return it->get<double>();
}

std::uint32_t index(const nlohmann::json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_unsigned()) {
    throw Error(Errc::InvariantViolation, std::string("missing id field '") + key + "'");
  }
  const auto v = it->get<std::uint64_t>();
  if (v > 0xFFFFFFFFull) throw Error(Errc::InvariantViolation, "id exceeds 32 bits");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::string encode_network(const RoadGraph& g) {
  if (!g.enhanced()) throw Error(Errc::NotEnhanced, "only enhanced networks can be saved");
  std::string out;
  out.reserve(64 + 64 * g.node_count() + 128 * g.edge_count() + 128 * g.curves().size());
  out += kNetworkMagic;
  out += static_cast<char>(kNetworkVersion);

  out += "{\"nodes\":[";
  for (NodeId id = 0; id < g.node_count(); ++id) {
    if (id) out += ',';
    out += "{\"id\":" + std::to_string(id) + ',';
    append_field(out, "lat", g.node(id).lat);
    out += ',';
    append_field(out, "lon", g.node(id).lon);
    out += '}';
  }
  out += "],\"edges\":[";
  for (EdgeId id = 0; id < g.edge_count(); ++id) {
    const RoadEdge& e = g.edge(id);
    if (id) out += ',';
    out += "{\"id\":" + std::to_string(id) + ",\"from\":" + std::to_string(e.from) +
           ",\"to\":" + std::to_string(e.to) + ',';
    append_field(out, "vmax", *e.v_max);
    out += ',';
    append_field(out, "gcd", *e.gcd);
    out += ',';
    append_field(out, "wfast", *e.w_fast);
    out += '}';
  }
  out += "],\"curves\":[";
  bool first = true;
  for (const auto& [key, c] : g.curves()) {
    if (!first) out += ',';
    first = false;
    out += "{\"in\":" + std::to_string(c.in_edge) + ",\"out\":" + std::to_string(c.out_edge) + ',';
    append_field(out, "cx", c.center.x);
    out += ',';
    append_field(out, "cy", c.center.y);
    out += ",\"r\":";
    if (c.straight()) {
      out += "\"inf\"";
    } else {
      append_double(out, c.radius);
    }
    out += ',';
    append_field(out, "eo", c.entry_offset);
    out += ',';
    append_field(out, "xo", c.exit_offset);
    out += '}';
  }
  out += "]}";
  return out;
}

RoadGraph decode_network(std::string_view bytes) {
  if (bytes.size() < kNetworkMagic.size() + 1) {
    throw Error(Errc::TruncatedFile, "network file shorter than its header");
  }
  if (bytes.substr(0, kNetworkMagic.size()) != kNetworkMagic) {
    throw Error(Errc::BadMagic, "not a network file");
  }
  const auto version = static_cast<unsigned char>(bytes[kNetworkMagic.size()]);
  if (version != kNetworkVersion) {
    throw Error(Errc::VersionMismatch, "network format version " + std::to_string(version) +
                                           ", expected " + std::to_string(kNetworkVersion));
  }
  const std::string_view body = bytes.substr(kNetworkMagic.size() + 1);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(body.begin(), body.end());
  } catch (const nlohmann::json::parse_error& e) {
    if (e.byte >= body.size()) throw Error(Errc::TruncatedFile, e.what());
    throw Error(Errc::InvariantViolation, e.what());
  }
  if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("edges") ||
      !doc.contains("curves") || !doc["nodes"].is_array() || !doc["edges"].is_array() ||
      !doc["curves"].is_array()) {
    throw Error(Errc::InvariantViolation, "network document lacks nodes/edges/curves arrays");
  }

  RoadGraph g;
  for (const auto& jn : doc["nodes"]) {
    if (index(jn, "id") != g.node_count()) {
      throw Error(Errc::InvariantViolation, "node ids must be dense and ordered");
    }
    const double lat = number(jn, "lat");
    const double lon = number(jn, "lon");
    if (!(std::abs(lat) <= 90.0) || !(std::abs(lon) <= 180.0)) {
      throw Error(Errc::InvariantViolation, "node coordinate out of range");
    }
    g.add_node(GeoPoint{lat, lon});
  }
  for (const auto& je : doc["edges"]) {
    if (index(je, "id") != g.edge_count()) {
      throw Error(Errc::InvariantViolation, "edge ids must be dense and ordered");
    }
    const NodeId from = index(je, "from");
    const NodeId to = index(je, "to");
    if (from >= g.node_count() || to >= g.node_count()) {
      throw Error(Errc::InvariantViolation,
                  "edge " + std::to_string(g.edge_count()) + " references a missing node");
    }
    if (from == to) throw Error(Errc::InvariantViolation, "self-loop edge");
    const EdgeId id = g.add_edge(from, to, number(je, "vmax"));
    RoadEdge& e = g.edge_mut(id);
    e.gcd = number(je, "gcd");
    e.w_fast = number(je, "wfast");
  }
  for (const auto& jc : doc["curves"]) {
    Curve c;
    c.in_edge = index(jc, "in");
    c.out_edge = index(jc, "out");
    if (c.in_edge >= g.edge_count() || c.out_edge >= g.edge_count()) {
      throw Error(Errc::InvariantViolation, "curve references a missing edge");
    }
    if (g.edge(c.in_edge).to != g.edge(c.out_edge).from) {
      throw Error(Errc::InvariantViolation, "curve joins edges that share no node");
    }
    c.center = PlanarPoint{number(jc, "cx"), number(jc, "cy")};
    const auto r = jc.find("r");
    if (r != jc.end() && r->is_string() && r->get<std::string>() == "inf") {
      c.radius = std::numeric_limits<double>::infinity();
    } else {
      c.radius = number(jc, "r");
    }
    c.entry_offset = number(jc, "eo");
    c.exit_offset = number(jc, "xo");
    if (g.curve(c.in_edge, c.out_edge)) {
      throw Error(Errc::InvariantViolation, "duplicate curve entry");
    }
    g.set_curve(c);
  }
  g.mark_enhanced();
  return g;
}

void save_network(const RoadGraph& g, const std::filesystem::path& path) {
  write_file_bytes(path, encode_network(g));
}

RoadGraph load_network(const std::filesystem::path& path) {
  return decode_network(read_file_bytes(path));
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

}  // namespace roadrl
