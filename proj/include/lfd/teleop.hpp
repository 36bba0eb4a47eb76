#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lfd/demos.hpp"

namespace lfd::teleop {

inline constexpr int kProtocolVersion = 1;

struct SessionOptions {
  int reposition_delay = 20;
  // Where control:save writes the demo file.
  std::string save_path = "teleop_demos.jsonl";
  // Particle grid stride cap for state frames.
  int max_grid_side = 17;
};

// Network-independent teleop session: consumes JSON text frames, keeps a
// latest-action-wins mailbox and advances the recording session one step per
// tick. Every outgoing frame is a compact single-line JSON object.
class Session {
 public:
  Session(SceneConfig scene, SessionOptions options = {});

  // Replies to send immediately (hello, errors, saved, ...).
  std::vector<std::string> handle(const std::string& frame);
  // Applies the pending action, if any; returns the state frame to
  // broadcast, or nothing when the tick was idle.
  std::optional<std::string> tick();

  bool started() const { return started_; }
  bool has_pending_action() const { return pending_.has_value(); }
  const demos::RecordingSession& recording() const { return recording_; }
  const SceneConfig& scene() const { return scene_; }

  nlohmann::json hello_message() const;
  nlohmann::json state_message() const;
  static std::string error_frame(const std::string& code, const std::string& message);

 private:
  std::vector<std::string> on_control(const nlohmann::json& j);

  SceneConfig scene_;
  SessionOptions options_;
  Vec3 start_;
  demos::RecordingSession recording_;
  bool started_ = false;
  std::optional<Action> pending_;
  double episode_reward_ = 0.0;
  int last_saved_ = 0;
};

// Default start for teleop episodes: centre of the start region.
Vec3 default_start(const SceneConfig& scene);

}  // namespace lfd::teleop
