#include "lfd/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "lfd/errors.hpp"

namespace lfd {

namespace {
constexpr int kCheckpointVersion = 1;
}

std::string checkpoint_to_string(const Checkpoint& c) {
  nlohmann::ordered_json j;
  j["version"] = kCheckpointVersion;
  j["algorithm"] = c.algorithm;
  j["global_step"] = c.global_step;
  j["seed"] = c.seed;
  j["scene_fingerprint"] = c.scene.fingerprint();
  nlohmann::ordered_json scene = nlohmann::ordered_json::object();
  const KeyValueFile scene_kv = c.scene.to_kv();
  for (const auto& [k, v] : scene_kv.entries()) scene[k] = v;
  j["scene"] = scene;
  j["policy"] = nlohmann::ordered_json::parse(c.policy.to_json().dump());
  j["value"] = nlohmann::ordered_json::parse(c.value.to_json().dump());
  if (c.discriminator) j["discriminator"] = nlohmann::ordered_json::parse(c.discriminator->to_json().dump());
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != kCheckpointVersion) throw FormatError("unsupported checkpoint version");
    Checkpoint c;
    c.algorithm = j.at("algorithm").get<std::string>();
    c.global_step = j.at("global_step").get<std::int64_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    KeyValueFile kv;
    for (const auto& [k, v] : j.at("scene").items()) kv.set(k, v.get<std::string>());
    c.scene = SceneConfig::from_kv(kv);
    if (c.scene.fingerprint() != j.at("scene_fingerprint").get<std::string>())
      throw FormatError("checkpoint scene does not match its stored fingerprint");
    c.policy = nn::Mlp::from_json(j.at("policy"));
    c.value = nn::Mlp::from_json(j.at("value"));
    if (j.contains("discriminator")) c.discriminator = nn::Mlp::from_json(j.at("discriminator"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint scene: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write checkpoint " + path);
  f << checkpoint_to_string(c);
  if (!f) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path, const std::optional<SceneConfig>& expected, bool allow_mismatch) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read checkpoint " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  Checkpoint c = checkpoint_from_string(ss.str());
  if (expected && expected->fingerprint() != c.scene.fingerprint() && !allow_mismatch)
    throw FingerprintMismatch("checkpoint was trained under scene " + c.scene.fingerprint() + ", requested scene is " +
                              expected->fingerprint() + " (pass the override flag to use it anyway)");
  return c;
}

}  // namespace lfd
