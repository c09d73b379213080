#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "roadrl/geo_graph.hpp"

namespace roadrl {

/// Network file layout: "DSAR", one version byte (0x01), then a UTF-8 JSON
/// document with nodes, edges and curves. Floats are written with 17
/// significant digits so every value round-trips bit-exactly.
inline constexpr std::string_view kNetworkMagic = "DSAR";
inline constexpr unsigned char kNetworkVersion = 0x01;

std::string encode_network(const RoadGraph& g);
RoadGraph decode_network(std::string_view bytes);

/// Throws NotEnhanced for graphs that have not been through enhancement.
void save_network(const RoadGraph& g, const std::filesystem::path& path);

/// Throws BadMagic, VersionMismatch, TruncatedFile or InvariantViolation.
RoadGraph load_network(const std::filesystem::path& path);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace roadrl
