#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roadrl {

/// Failure categories raised across the library. Each maps to one of the
/// documented error values of the operation that raises it.
enum class Errc {
  EmptyGraph,
  DegenerateEdge,
  InvalidDefault,
  NotEnhanced,
  DegenerateTriple,
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  InvariantViolation,
  DegenerateInput,
  InvalidSpec,
  ParseError,
  EmptyNetwork,
  SameNode,
  InvalidWeight,
  NumericFault,
  ShapeError,
  CacheError,
  NotWarm,
  ShapeMismatch,
  TooManyVehicles,
  PlacementFailed,
  NoData,
  ConfigError,
  IoError,
  ServerError,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::EmptyGraph: return "EmptyGraph";
    case Errc::DegenerateEdge: return "DegenerateEdge";
    case Errc::InvalidDefault: return "InvalidDefault";
    case Errc::NotEnhanced: return "NotEnhanced";
    case Errc::DegenerateTriple: return "DegenerateTriple";
    case Errc::BadMagic: return "BadMagic";
    case Errc::VersionMismatch: return "VersionMismatch";
    case Errc::TruncatedFile: return "TruncatedFile";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::ParseError: return "ParseError";
    case Errc::EmptyNetwork: return "EmptyNetwork";
    case Errc::SameNode: return "SameNode";
    case Errc::InvalidWeight: return "InvalidWeight";
    case Errc::NumericFault: return "NumericFault";
    case Errc::ShapeError: return "ShapeError";
    case Errc::CacheError: return "CacheError";
    case Errc::NotWarm: return "NotWarm";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::TooManyVehicles: return "TooManyVehicles";
    case Errc::PlacementFailed: return "PlacementFailed";
    case Errc::NoData: return "NoData";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
    case Errc::ServerError: return "ServerError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace roadrl
