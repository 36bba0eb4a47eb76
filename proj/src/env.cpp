#include "lfd/env.hpp"

#include <limits>
#include <stdexcept>

#include "lfd/errors.hpp"
#include "lfd/exposure.hpp"

namespace lfd {

bool Action::valid() const {
  for (const int b : beta)
    if (b < -1 || b > 1) return false;
  return true;
}

std::string_view to_string(DoneReason r) {
  switch (r) {
    case DoneReason::kNone: return "none";
    case DoneReason::kTargetReached: return "target_reached";
    case DoneReason::kTimeout: return "timeout";
  }
  return "none";
}

DoneReason done_reason_from_string(std::string_view s) {
  if (s == "none") return DoneReason::kNone;
  if (s == "target_reached") return DoneReason::kTargetReached;
  if (s == "timeout") return DoneReason::kTimeout;
  throw FormatError("unknown done_reason `" + std::string(s) + "`");
}

Observation observe(const EnvState& state, const SceneConfig& scene) {
  const Vec3& p = state.ee_position;
  const Vec3& q = scene.tumour_center;
  const Vec3& pt = scene.target_position;
  return {p.x,  p.y,  p.z,  q.x,         q.y,          q.z,
          pt.x, pt.y, pt.z, distance(p, q), distance(p, pt), state.gripper_closed ? 1.0 : 0.0};
}

double reward(const EnvState& state, const SceneConfig& scene, const RewardConfig& rc) {
  if (state.gripper_closed) return -distance(state.ee_position, scene.target_position) * rc.k;
  return -distance(state.ee_position, scene.tumour_center) * rc.k - 0.5;
}

TissueEnv::TissueEnv(SceneConfig scene)
    : scene_(std::move(scene)),
      reward_config_(RewardConfig::for_workspace(scene_.workspace_box)),
      rest_tissue_(make_sheet(scene_)) {
  scene_.validate();
  state_.tissue = rest_tissue_;
}

Observation TissueEnv::reset(const Vec3& start, std::uint64_t seed) {
  if (!is_finite(start) || !scene_.workspace_box.contains(start))
    throw std::out_of_range("reset: start position outside workspace_box");
  if (start.y <= scene_.sheet_center.y)
    throw std::out_of_range("reset: start position must be above the sheet rest plane");
  state_ = EnvState{};
  state_.ee_position = start;
  state_.tissue = rest_tissue_;
  state_.seed = seed;
  initialized_ = true;
  return observation();
}

StepResult TissueEnv::step(const Action& action) {
  if (!initialized_) throw ContractViolation("step before reset");
  if (state_.done) throw ContractViolation("step after episode end; call reset");
  if (!action.valid()) throw ContractViolation("action components must be in {-1, 0, +1}");

  ++state_.t;
  Vec3 p = state_.ee_position;
  for (int a = 0; a < 3; ++a) p[a] += scene_.step_size * action.beta[a];
  state_.ee_position = scene_.workspace_box.clamp(p);

  auto& tissue = state_.tissue;
  if (!state_.gripper_closed) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < tissue.size(); ++i) {
      if (tissue.fixed_mask[i]) continue;
      const double d = distance(tissue.particles[i], state_.ee_position);
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0 && best_d <= scene_.grasp_radius) {
      tissue.grasped_particle = best;
      state_.gripper_closed = true;
    }
  }
  if (state_.gripper_closed) tissue = solve_tissue(std::move(tissue), state_.ee_position,
                                                   scene_.solver_iterations);

  StepResult out;
  out.reward = reward(state_, scene_, reward_config_);
  if (state_.gripper_closed &&
      distance(state_.ee_position, scene_.target_position) <= scene_.target_radius) {
    state_.done = true;
    state_.done_reason = DoneReason::kTargetReached;
  } else if (state_.t >= scene_.max_episode_steps) {
    state_.done = true;
    state_.done_reason = DoneReason::kTimeout;
  }
  out.done = state_.done;
  out.observation = observation();
  return out;
}

double TissueEnv::exposure() const {
  return tumour_exposure(scene_, state_.tissue, scene_.te_samples);
}

double TissueEnv::rest_exposure() const {
  return tumour_exposure(scene_, rest_tissue_, scene_.te_samples);
}

nlohmann::json to_json(const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); }

nlohmann::json snapshot_json(const EnvState& state, const SceneConfig& scene) {
  nlohmann::json particles = nlohmann::json::array();
  for (const auto& p : state.tissue.particles) particles.push_back(to_json(p));
  nlohmann::json j;
  j["ee_position"] = to_json(state.ee_position);
  j["gripper_closed"] = state.gripper_closed;
  j["t"] = state.t;
  j["done"] = state.done;
  j["done_reason"] = std::string(to_string(state.done_reason));
  j["grid"] = {state.tissue.nx, state.tissue.nz};
  j["particles"] = std::move(particles);
  j["grasped_particle"] =
      state.tissue.grasped_particle ? nlohmann::json(*state.tissue.grasped_particle) : nlohmann::json();
  j["scene_fingerprint"] = scene.fingerprint();
  return j;
}

}  // namespace lfd
