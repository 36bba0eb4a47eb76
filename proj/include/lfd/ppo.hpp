#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "lfd/env.hpp"
#include "lfd/kv_file.hpp"
#include "lfd/nn/adam.hpp"
#include "lfd/policy.hpp"
#include "lfd/starts.hpp"

namespace lfd::ppo {

struct PpoConfig {
  double clip_epsilon = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int horizon = 2048;
  int epochs = 4;
  int minibatch_size = 256;
  double value_coef = 0.5;
  double entropy_coef = 0.005;
  double learning_rate = 3e-4;
  double max_grad_norm = 0.5;
  std::int64_t total_steps = 1'000'000;
  std::uint64_t seed = 1;
  int num_envs = 1;
  std::vector<int> hidden{128, 128};

  void validate() const;
  void write_kv(KeyValueFile& kv) const;
  static PpoConfig from_kv(const KeyValueFile& kv, PpoConfig base);
  static PpoConfig from_kv(const KeyValueFile& kv) { return from_kv(kv, PpoConfig{}); }
  static const std::vector<std::string>& keys();
};

struct Transition {
  Observation observation{};
  Action action;
  double reward = 0.0;      // learning signal (may be rewritten by GAIL)
  double env_reward = 0.0;  // extrinsic reward as returned by the env
  double value = 0.0;
  double log_prob = 0.0;
  bool done = false;
  int env_index = 0;
};

struct RolloutBuffer {
  std::vector<Transition> transitions;
  // Per env: V(s_T) of the observation following its last transition, or 0
  // when that transition ended an episode.
  std::vector<double> bootstrap_values;
  std::vector<double> advantages;
  std::vector<double> returns;
  // Extrinsic return / max_episode_steps of each episode finished during collection.
  std::vector<double> episode_scores;
  bool complete = false;

  std::size_t size() const { return transitions.size(); }
};

// Clip bound of the surrogate: (1 + eps) A for A >= 0, (1 - eps) A otherwise.
double clip_target(double epsilon, double advantage);
// min(ratio * A, clip_target(eps, A)).
double clipped_objective(double ratio, double advantage, double epsilon);

// Backward recursion A_t = delta_t + gamma lambda A_{t+1} per env stream,
// cut at done flags. Fills buffer.advantages / buffer.returns.
void compute_gae(RolloutBuffer& buffer, double gamma, double lambda);

void normalize(std::vector<double>& xs);

struct LossOutput {
  double loss = 0.0;
  double mean_objective = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int rejected = 0;
  nn::Gradients policy_grads;
  nn::Gradients value_grads;
};

// Combined loss on the samples `indices` of a buffer whose advantages are
// already computed (and normalized if desired):
//   -mean(objective) + value_coef * mean((V - R)^2) - entropy_coef * mean(H).
// Gradients are those of the returned loss. Samples with non-finite ratios
// are dropped and counted in `rejected`.
LossOutput ppo_loss(const RolloutBuffer& buffer, const std::vector<double>& advantages,
                    const std::vector<std::size_t>& indices, const Policy& policy,
                    const nn::Mlp& value_net, const PpoConfig& config);

struct UpdateMetrics {
  double mean_objective = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int rejected = 0;
  bool aborted = false;
};

// One training-metrics CSV row.
struct MetricsRow {
  std::int64_t global_step = 0;
  double mean_episode_reward = 0.0;  // NaN when no episode finished
  double env_reward_mean = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  std::optional<double> gail_reward_mean;
  std::optional<double> disc_acc_expert;
  std::optional<double> disc_acc_gen;
};

std::string metrics_csv_header();
std::string metrics_csv_line(const MetricsRow& row);

// PPO with separate policy and value networks over a pool of environments.
class PpoTrainer {
 public:
  PpoTrainer(const SceneConfig& scene, PpoConfig config);

  // Exactly `horizon` transitions, round-robin over the env pool.
  RolloutBuffer collect(int horizon);
  RolloutBuffer collect() { return collect(config_.horizon); }

  // GAE + advantage normalization + `epochs` passes of minibatch Adam. A
  // non-finite loss restores the pre-update parameters and sets `aborted`.
  UpdateMetrics update(RolloutBuffer& buffer);

  const Policy& policy() const { return policy_; }
  Policy& policy() { return policy_; }
  const nn::Mlp& value_net() const { return value_net_; }
  nn::Mlp& value_net() { return value_net_; }
  const PpoConfig& config() const { return config_; }
  const SceneConfig& scene() const { return scene_; }
  std::int64_t global_step() const { return global_step_; }

  double value(const Observation& obs) const;

 private:
  SceneConfig scene_;
  PpoConfig config_;
  Policy policy_;
  nn::Mlp value_net_;
  nn::Adam policy_opt_;
  nn::Adam value_opt_;
  std::vector<TissueEnv> envs_;
  std::vector<Observation> current_obs_;
  std::vector<double> episode_return_;
  StartSampler starts_;
  std::mt19937_64 action_rng_;
  std::mt19937_64 shuffle_rng_;
  std::int64_t global_step_ = 0;
};

// Called between collection and update; may rewrite buffer rewards and
// fills the GAIL-specific metric columns.
using RewardHook = std::function<void(RolloutBuffer&, MetricsRow&)>;
using RowSink = std::function<void(const MetricsRow&)>;

// Alternates collect / hook / update until total_steps; one row per update.
void train(PpoTrainer& trainer, const RewardHook& hook, const RowSink& sink);

}  // namespace lfd::ppo
