#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "json.hpp"
#include "lfd/geometry.hpp"
#include "lfd/scene.hpp"
#include "lfd/tissue.hpp"

namespace lfd {

inline constexpr int kObservationSize = 12;
inline constexpr int kActionBranches = 3;
inline constexpr int kBranchChoices = 3;

// [p_t(3), q(3), p_T(3), |p_t - q|, |p_t - p_T|, g_t]
using Observation = std::array<double, kObservationSize>;

// Per-axis increment direction, each component in {-1, 0, +1}.
struct Action {
  std::array<int, 3> beta{0, 0, 0};

  bool valid() const;
  // Branch choice c in {0,1,2} maps to beta = c - 1.
  int choice(int axis) const { return beta[axis] + 1; }
  static Action from_choices(int cx, int cy, int cz) { return {{cx - 1, cy - 1, cz - 1}}; }

  friend bool operator==(const Action&, const Action&) = default;
};

enum class DoneReason { kNone, kTargetReached, kTimeout };
std::string_view to_string(DoneReason r);
DoneReason done_reason_from_string(std::string_view s);

struct EnvState {
  Vec3 ee_position;
  bool gripper_closed = false;
  TissueState tissue;
  int t = 0;
  bool done = false;
  DoneReason done_reason = DoneReason::kNone;
  std::uint64_t seed = 0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool done = false;
};

Observation observe(const EnvState& state, const SceneConfig& scene);

// Open gripper: -|p_t - q| k - 0.5; closed: -|p_t - p_T| k.
double reward(const EnvState& state, const SceneConfig& scene, const RewardConfig& rc);

// Single-threaded, deterministic retraction environment. The grasp triggers
// automatically when the open gripper comes within grasp_radius of a free
// particle and is held until the episode ends.
class TissueEnv {
 public:
  explicit TissueEnv(SceneConfig scene);

  // Throws std::out_of_range if start is outside the workspace or not above
  // the sheet rest plane.
  Observation reset(const Vec3& start, std::uint64_t seed = 0);
  // Throws ContractViolation after the episode is done or on an invalid action.
  StepResult step(const Action& action);

  const EnvState& state() const { return state_; }
  const SceneConfig& scene() const { return scene_; }
  const RewardConfig& reward_config() const { return reward_config_; }
  Observation observation() const { return observe(state_, scene_); }

  double exposure() const;
  // Sheet at rest, nothing grasped.
  double rest_exposure() const;

  // Test hook: replaces the state wholesale.
  void set_state(EnvState s) { state_ = std::move(s); }

 private:
  SceneConfig scene_;
  RewardConfig reward_config_;
  TissueState rest_tissue_;
  EnvState state_;
  bool initialized_ = false;
};

nlohmann::json to_json(const Vec3& v);
nlohmann::json snapshot_json(const EnvState& state, const SceneConfig& scene);

}  // namespace lfd
