#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "roadrl/error.hpp"
#include "roadrl/geo_graph.hpp"

namespace roadrl {

/// Malformed XML, with the byte offset where parsing stopped.
class OsmParseError : public Error {
 public:
  OsmParseError(std::size_t offset, const std::string& what)
      : Error(Errc::ParseError, what + " at byte " + std::to_string(offset)), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

using OsmTags = std::map<std::string, std::string>;

struct OsmNode {
  std::int64_t id = 0;
  GeoPoint pos;
};

struct OsmWay {
  std::int64_t id = 0;
  std::vector<std::int64_t> refs;
  OsmTags tags;
};

struct OsmDocument {
  std::vector<OsmNode> nodes;  // document order
  std::vector<OsmWay> ways;    // document order
  std::size_t nodes_skipped = 0;  // missing or invalid lat/lon, repeated id
  std::size_t ways_skipped = 0;   // fewer than two refs, repeated id

  std::size_t entity_count() const { return nodes.size() + ways.size(); }
};

/// Streaming pass over OSM-XML. Only <node>, <way>, <nd> and <tag> are
/// interpreted; everything else is checked for well-formedness and skipped.
OsmDocument parse_osm_xml(std::string_view bytes);

inline const std::vector<std::string>& default_drivable_types() {
  static const std::vector<std::string> types{
      "motorway",      "trunk",         "primary",        "secondary",    "tertiary",
      "unclassified",  "residential",   "living_street",  "service",      "motorway_link",
      "trunk_link",    "primary_link",  "secondary_link", "tertiary_link"};
  return types;
}

struct Drivable {
  bool oneway = false;
  bool reversed = false;  // oneway=-1
  std::optional<double> v_max;  // m/s

  friend bool operator==(const Drivable&, const Drivable&) = default;
};

enum class RejectReason { MissingHighway, NotDrivable };

struct Rejected {
  RejectReason reason = RejectReason::NotDrivable;

  friend bool operator==(const Rejected&, const Rejected&) = default;
};

using WayClass = std::variant<Drivable, Rejected>;

/// Parses an OSM maxspeed value into m/s; nullopt for anything unusable.
std::optional<double> parse_maxspeed(std::string_view value);

WayClass classify_way(const OsmTags& tags,
                      const std::vector<std::string>& drivable = default_drivable_types());

struct ImportReport {
  std::size_t nodes_extracted = 0;
  std::size_t nodes_skipped = 0;
  std::size_t ways_extracted = 0;
  std::size_t ways_skipped_type = 0;
  std::size_t ways_skipped_unknown_type = 0;
  std::size_t edges_missing_vmax = 0;
  std::size_t edges_degenerate = 0;
  std::size_t refs_dangling = 0;
};

/// key=value lines, one counter per line.
std::string format_report(const ImportReport& r);

struct OsmImportOptions {
  std::vector<std::string> drivable_types = default_drivable_types();
  EnhanceOptions enhance;
};

/// Raw directed graph before cleaning; edge_way[e] is the way id edge e
/// came from.
struct AssembledGraph {
  RoadGraph graph;
  std::vector<std::int64_t> edge_way;
};

/// One edge per consecutive ref pair of each drivable way (two for two-way
/// ways). Throws EmptyNetwork when nothing drivable remains.
AssembledGraph assemble_graph(const OsmDocument& doc, ImportReport& report,
                              const OsmImportOptions& options = {});

/// assemble_graph followed by cleaning and enhancement.
RoadGraph build_graph(const OsmDocument& doc, ImportReport& report,
                      const OsmImportOptions& options = {});

struct OsmImport {
  RoadGraph graph;
  ImportReport report;
};

OsmImport import_osm(std::string_view bytes, const OsmImportOptions& options = {});
OsmImport import_osm_file(const std::filesystem::path& path, const OsmImportOptions& options = {});

}  // namespace roadrl
