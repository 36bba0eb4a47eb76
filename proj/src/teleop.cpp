#include "lfd/teleop.hpp"

#include <algorithm>

#include "lfd/errors.hpp"

namespace lfd::teleop {
namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

Vec3 parse_vec(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw FormatError("expected [x, y, z]");
  for (const auto& e : j)
    if (!e.is_number()) throw FormatError("expected [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

Vec3 default_start(const SceneConfig& scene) {
  const StartRegion r = StartRegion::over_sheet(scene);
  return {0.5 * (r.x_min + r.x_max), r.y, 0.5 * (r.z_min + r.z_max)};
}

Session::Session(SceneConfig scene, SessionOptions options)
    : scene_(std::move(scene)),
      options_(std::move(options)),
      start_(default_start(scene_)),
      recording_(scene_, start_, options_.reposition_delay) {}

std::string Session::error_frame(const std::string& code, const std::string& message) {
  return nlohmann::json{{"type", "error"}, {"code", code}, {"message", message}}.dump();
}

nlohmann::json Session::hello_message() const {
  nlohmann::json scene;
  const KeyValueFile scene_kv = scene_.to_kv();
  for (const auto& [k, v] : scene_kv.entries()) scene[k] = v;
  return {{"type", "hello"},
          {"version", kProtocolVersion},
          {"protocol_version", kProtocolVersion},
          {"fingerprint", scene_.fingerprint()},
          {"scene", scene},
          {"reposition_delay", options_.reposition_delay}};
}

nlohmann::json Session::state_message() const {
  const auto& env = recording_.env();
  const auto& st = env.state();
  const auto& tissue = st.tissue;
  const int stride_x = std::max(1, (tissue.nx + options_.max_grid_side - 2) / (options_.max_grid_side - 1));
  const int stride_z = std::max(1, (tissue.nz + options_.max_grid_side - 2) / (options_.max_grid_side - 1));
  nlohmann::json grid = nlohmann::json::array();
  int gx = 0;
  int gz = 0;
  for (int iz = 0; iz < tissue.nz; iz += stride_z, ++gz) {
    gx = 0;
    for (int ix = 0; ix < tissue.nx; ix += stride_x, ++gx) grid.push_back(vec_json(tissue.particles[tissue.index(ix, iz)]));
  }
  const bool repositioning = recording_.phase() == demos::RecordingSession::Phase::kRepositioning;
  return {{"type", "state"},
          {"t", st.t},
          {"ee", vec_json(st.ee_position)},
          {"gripper", st.gripper_closed ? 1 : 0},
          {"te", env.exposure()},
          {"episode_reward", episode_reward_},
          {"phase", repositioning ? "repositioning" : (started_ ? "active" : "idle")},
          {"delay_remaining", recording_.delay_remaining()},
          {"cursor", vec_json(recording_.cursor())},
          {"episodes", recording_.completed_episodes()},
          {"grid", {{"nx", gx}, {"nz", gz}, {"points", grid}}}};
}

std::vector<std::string> Session::handle(const std::string& frame) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(frame);
  } catch (const nlohmann::json::exception&) {
    return {error_frame("malformed", "frame is not valid JSON")};
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    return {error_frame("malformed", "frame must be an object with a string `type`")};
  const std::string type = j["type"].get<std::string>();
  if (type == "hello") {
    if (!j.contains("version") || !j["version"].is_number_integer())
      return {error_frame("malformed", "hello requires an integer `version`")};
    if (j["version"].get<int>() != kProtocolVersion)
      return {error_frame("version", "unsupported protocol version " + j["version"].dump())};
    return {hello_message().dump()};
  }
  if (type == "action") {
    const auto it = j.find("beta");
    if (it == j.end() || !it->is_array() || it->size() != 3)
      return {error_frame("malformed", "action requires `beta` with three components")};
    Action a;
    for (int i = 0; i < 3; ++i) {
      if (!(*it)[i].is_number_integer())
        return {error_frame("range", "beta components must be integers in {-1, 0, 1}")};
      const auto b = (*it)[i].get<long long>();
      if (b < -1 || b > 1) return {error_frame("range", "beta component " + std::to_string(i) + " = " +
                                                         std::to_string(b) + " is outside {-1, 0, 1}")};
      a.beta[i] = static_cast<int>(b);
    }
    if (!started_) return {error_frame("not_started", "send control:start before actions")};
    pending_ = a;
    return {};
  }
  if (type == "control") return on_control(j);
  if (type == "state" || type == "saved" || type == "error")
    return {error_frame("direction", "`" + type + "` frames are server-to-client only")};
  return {error_frame("unknown_type", "unknown message type `" + type + "`")};
}

std::vector<std::string> Session::on_control(const nlohmann::json& j) {
  if (!j.contains("command") || !j["command"].is_string())
    return {error_frame("malformed", "control requires a string `command`")};
  const std::string cmd = j["command"].get<std::string>();
  try {
    if (cmd == "set_start") {
      if (!j.contains("start")) return {error_frame("malformed", "set_start requires `start`")};
      const Vec3 s = parse_vec(j["start"]);
      if (!scene_.workspace_box.contains(s) || s.y <= scene_.sheet_center.y)
        return {error_frame("range", "start must be inside the workspace and above the sheet")};
      start_ = s;
      return {};
    }
    if (cmd == "start") {
      if (j.contains("start")) {
        const Vec3 s = parse_vec(j["start"]);
        if (!scene_.workspace_box.contains(s) || s.y <= scene_.sheet_center.y)
          return {error_frame("range", "start must be inside the workspace and above the sheet")};
        start_ = s;
      }
      recording_.reset(start_);
      started_ = true;
      pending_.reset();
      episode_reward_ = 0.0;
      return {state_message().dump()};
    }
    if (cmd == "reset") {
      recording_.reset(start_);
      pending_.reset();
      episode_reward_ = 0.0;
      return {state_message().dump()};
    }
    if (cmd == "save") {
      const auto& set = recording_.completed();
      if (set.episode_count() == 0) return {error_frame("empty", "no completed episodes to save")};
      demos::save(set, scene_, options_.save_path);
      last_saved_ = set.episode_count();
      return {nlohmann::json{{"type", "saved"}, {"count", last_saved_}, {"path", options_.save_path}}.dump()};
    }
  } catch (const FormatError& e) {
    return {error_frame("malformed", e.what())};
  } catch (const IoError& e) {
    return {error_frame("io", e.what())};
  }
  return {error_frame("unknown_command", "unknown control command `" + cmd + "`")};
}

std::optional<std::string> Session::tick() {
  if (!started_ || !pending_) return std::nullopt;
  const Action a = *pending_;
  pending_.reset();
  const bool was_active = recording_.phase() == demos::RecordingSession::Phase::kActive;
  if (was_active) {
    const auto res = recording_.apply(a);
    episode_reward_ += res.reward;
    if (res.episode_finished) {
      nlohmann::json s = state_message();
      s["episode_finished"] = true;
      s["done_reason"] = std::string(to_string(res.done_reason));
      return s.dump();
    }
  } else {
    recording_.apply(a);
    if (recording_.phase() == demos::RecordingSession::Phase::kActive) episode_reward_ = 0.0;
  }
  return state_message().dump();
}

}  // namespace lfd::teleop
