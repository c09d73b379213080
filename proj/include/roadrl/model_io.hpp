#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "roadrl/ddpg.hpp"
#include "roadrl/mlp.hpp"

namespace roadrl {

/// .acnet layout: "ACN1", u32 little-endian header length, UTF-8 JSON header
/// (format version, role, layer sizes, activations, leaky slope, steps,
/// date, time, has_target), then float32 little-endian parameters for the
/// live network and, when has_target, the target network. Per layer the
/// weights are written row by row (out x in) followed by the bias.
inline constexpr std::string_view kModelMagic = "ACN1";
inline constexpr int kModelVersion = 1;

enum class NetRole { Actor, Critic };

struct NetFile {
  NetRole role = NetRole::Actor;
  Mlp live;
  std::optional<Mlp> target;
  std::uint64_t steps = 0;
  std::string date;  // YYYYMMDD, UTC
  std::string time;  // HHMMSS, UTC
};

std::string encode_acnet(const NetFile& file);
NetFile decode_acnet(std::string_view bytes);

struct ModelPaths {
  std::filesystem::path actor;
  std::filesystem::path critic;
  std::filesystem::path actor_txt;
  std::filesystem::path critic_txt;
};

/// "<layer-config>_<YYYYMMDD>_<HHMMSS>_<steps>", layer config of the actor.
std::string model_prefix(const Mlp& actor, std::uint64_t steps,
                         std::chrono::system_clock::time_point when);

/// Writes the four model files into `dir` (created when missing).
ModelPaths save_model(const DdpgAgent& agent, const std::filesystem::path& dir,
                      std::chrono::system_clock::time_point when = std::chrono::system_clock::now());

struct LoadedModel {
  Mlp actor, critic;
  std::optional<Mlp> actor_target, critic_target;
  std::uint64_t steps = 0;
};

/// Throws BadMagic, VersionMismatch, TruncatedFile, or ShapeMismatch when
/// the files do not form an actor/critic pair.
LoadedModel load_model(const std::filesystem::path& actor_file,
                       const std::filesystem::path& critic_file);

/// Agent around loaded networks; targets are exact copies of the live
/// networks unless stored targets were present.
DdpgAgent make_agent(const LoadedModel& model, const DdpgConfig& config, std::uint64_t seed);

}  // namespace roadrl
