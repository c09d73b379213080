#include "roadrl/model_io.hpp"

#include <bit>
#include <cstring>
#include <ctime>
#include <sstream>

#include <nlohmann/json.hpp>

#include "roadrl/error.hpp"
#include "roadrl/network_io.hpp"

namespace roadrl {

namespace {

static_assert(std::endian::native == std::endian::little, "little-endian host required");

std::string_view role_name(NetRole r) { return r == NetRole::Actor ? "actor" : "critic"; }

void append_floats(std::string& out, const Mlp& net) {
  for (const auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        const float f = static_cast<float>(layer.weights(i, j));
        out.append(reinterpret_cast<const char*>(&f), sizeof f);
      }
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      const float f = static_cast<float>(layer.bias(i));
      out.append(reinterpret_cast<const char*>(&f), sizeof f);
    }
  }
}

Mlp read_floats(std::string_view& in, const std::vector<int>& sizes,
                const std::vector<Activation>& acts, double slope) {
  Mlp net(sizes, acts, slope);
  auto next = [&in]() {
    if (in.size() < sizeof(float)) throw Error(Errc::TruncatedFile, "model parameters cut short");
    float f;
    std::memcpy(&f, in.data(), sizeof f);
    in.remove_prefix(sizeof f);
    return static_cast<double>(f);
  };
  for (auto& layer : net.mutable_layers()) {
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) layer.weights(i, j) = next();
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = next();
  }
  return net;
}

std::string describe(const NetFile& f) {
  std::ostringstream os;
  os << "role = " << role_name(f.role) << '\n'
     << "layers = " << f.live.layer_config() << '\n'
     << "activations =";
  for (auto a : f.live.activations()) os << ' ' << activation_name(a);
  os << '\n'
     << "leaky_slope = " << f.live.leaky_slope() << '\n'
     << "parameters = " << f.live.parameter_count() << '\n'
     << "steps = " << f.steps << '\n'
     << "date = " << f.date << '\n'
     << "time = " << f.time << '\n'
     << "has_target = " << (f.target ? "true" : "false") << '\n';
  return os.str();
}

std::pair<std::string, std::string> utc_stamp(std::chrono::system_clock::time_point when) {
  const std::time_t t = std::chrono::system_clock::to_time_t(when);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char date[16], time[16];
  std::strftime(date, sizeof date, "%Y%m%d", &tm);
  std::strftime(time, sizeof time, "%H%M%S", &tm);
  return {date, time};
}

}  // namespace

std::string encode_acnet(const NetFile& file) {
  nlohmann::json header;
  header["version"] = kModelVersion;
  header["role"] = role_name(file.role);
  header["sizes"] = file.live.sizes();
  std::vector<std::string> acts;
  for (auto a : file.live.activations()) acts.emplace_back(activation_name(a));
  header["activations"] = acts;
  header["leaky_slope"] = file.live.leaky_slope();
  header["steps"] = file.steps;
  header["date"] = file.date;
  header["time"] = file.time;
  header["has_target"] = file.target.has_value();
  if (file.target && !file.target->same_shape(file.live)) {
    throw Error(Errc::ShapeMismatch, "target network shape differs from live network");
  }
  const std::string text = header.dump();

  std::string out(kModelMagic);
  const auto len = static_cast<std::uint32_t>(text.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((len >> (8 * i)) & 0xFF));
  out += text;
  out.reserve(out.size() + 8 * file.live.parameter_count());
  append_floats(out, file.live);
  if (file.target) append_floats(out, *file.target);
  return out;
}

NetFile decode_acnet(std::string_view bytes) {
  if (bytes.size() < kModelMagic.size()) throw Error(Errc::TruncatedFile, "model file too short");
  if (bytes.substr(0, kModelMagic.size()) != kModelMagic) {
    throw Error(Errc::BadMagic, "not an .acnet model file");
  }
  bytes.remove_prefix(kModelMagic.size());
  if (bytes.size() < 4) throw Error(Errc::TruncatedFile, "model header length missing");
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  bytes.remove_prefix(4);
  if (bytes.size() < len) throw Error(Errc::TruncatedFile, "model header cut short");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, len));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvariantViolation, std::string("model header: ") + e.what());
  }
  bytes.remove_prefix(len);

  NetFile f;
  try {
    if (header.at("version").get<int>() != kModelVersion) {
      throw Error(Errc::VersionMismatch, "model format version " + header.at("version").dump());
    }
    const auto role = header.at("role").get<std::string>();
    if (role != "actor" && role != "critic") throw Error(Errc::InvariantViolation, "unknown role " + role);
    f.role = role == "actor" ? NetRole::Actor : NetRole::Critic;
    const auto sizes = header.at("sizes").get<std::vector<int>>();
    std::vector<Activation> acts;
    for (const auto& a : header.at("activations")) acts.push_back(activation_from_name(a.get<std::string>()));
    const double slope = header.at("leaky_slope").get<double>();
    f.steps = header.at("steps").get<std::uint64_t>();
    f.date = header.at("date").get<std::string>();
    f.time = header.at("time").get<std::string>();
    f.live = read_floats(bytes, sizes, acts, slope);
    if (header.at("has_target").get<bool>()) f.target = read_floats(bytes, sizes, acts, slope);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvariantViolation, std::string("model header: ") + e.what());
  }
  if (!bytes.empty()) throw Error(Errc::InvariantViolation, "trailing bytes after model parameters");
  return f;
}

std::string model_prefix(const Mlp& actor, std::uint64_t steps,
                         std::chrono::system_clock::time_point when) {
  const auto [date, time] = utc_stamp(when);
  return actor.layer_config() + "_" + date + "_" + time + "_" + std::to_string(steps);
}

ModelPaths save_model(const DdpgAgent& agent, const std::filesystem::path& dir,
                      std::chrono::system_clock::time_point when) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
  const auto [date, time] = utc_stamp(when);
  const std::string prefix = model_prefix(agent.actor(), agent.steps(), when);

  const NetFile actor{NetRole::Actor, agent.actor(), agent.actor_target(), agent.steps(), date, time};
  const NetFile critic{NetRole::Critic, agent.critic(), agent.critic_target(), agent.steps(), date, time};
  ModelPaths paths{dir / (prefix + "_actor.acnet"), dir / (prefix + "_critic.acnet"),
                   dir / (prefix + "_actor.txt"), dir / (prefix + "_critic.txt")};
  write_file_bytes(paths.actor, encode_acnet(actor));
  write_file_bytes(paths.critic, encode_acnet(critic));
  write_file_bytes(paths.actor_txt, describe(actor));
  write_file_bytes(paths.critic_txt, describe(critic));
  return paths;
}

LoadedModel load_model(const std::filesystem::path& actor_file,
                       const std::filesystem::path& critic_file) {
  NetFile actor = decode_acnet(read_file_bytes(actor_file));
  NetFile critic = decode_acnet(read_file_bytes(critic_file));
  if (actor.live.output_size() != 1 || critic.live.output_size() != 1 ||
      critic.live.input_size() != actor.live.input_size() + 1) {
    throw Error(Errc::ShapeMismatch, "actor " + actor.live.layer_config() + " and critic " +
                                         critic.live.layer_config() + " do not form a pair");
  }
  if (actor.role != NetRole::Actor || critic.role != NetRole::Critic) {
    throw Error(Errc::ShapeMismatch, "actor and critic files are swapped");
  }
  LoadedModel m;
  m.actor = std::move(actor.live);
  m.critic = std::move(critic.live);
  m.actor_target = std::move(actor.target);
  m.critic_target = std::move(critic.target);
  m.steps = actor.steps;
  return m;
}

DdpgAgent make_agent(const LoadedModel& model, const DdpgConfig& config, std::uint64_t seed) {
  return DdpgAgent(model.actor, model.critic, config, seed, model.steps,
                   model.actor_target ? &*model.actor_target : nullptr,
                   model.critic_target ? &*model.critic_target : nullptr);
}

}  // namespace roadrl
