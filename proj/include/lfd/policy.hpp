#pragma once

#include <Eigen/Dense>
#include <random>

#include "lfd/env.hpp"
#include "lfd/nn/mlp.hpp"

namespace lfd {

// Network input: positions and distances divided by this many mm, gripper
// flag unchanged.
inline constexpr double kObservationScale = 50.0;

Eigen::VectorXd encode_observation(const Observation& obs);

// One-hot of the three branch choices, 9 entries.
Eigen::VectorXd encode_action(const Action& action);

inline constexpr int kActionEncodingSize = kActionBranches * kBranchChoices;

struct SampledAction {
  Action action;
  double log_prob = 0.0;
};

// Factored categorical policy: three independent 3-way branches (one per axis).
class Policy {
 public:
  Policy() = default;
  explicit Policy(nn::Mlp net);
  static Policy create(const std::vector<int>& hidden, std::uint64_t seed);

  const nn::Mlp& net() const { return net_; }
  nn::Mlp& net() { return net_; }

  // 9 probabilities, branch-major.
  Eigen::VectorXd probabilities(const Observation& obs) const;
  SampledAction sample(const Observation& obs, std::mt19937_64& rng) const;
  // Argmax per branch; ties resolve to the lowest choice index.
  Action greedy(const Observation& obs) const;
  double log_prob(const Observation& obs, const Action& action) const;

 private:
  nn::Mlp net_;
};

nn::Mlp make_value_net(const std::vector<int>& hidden, std::uint64_t seed);

// Log-probability of `action` under branch-major probabilities `probs` (column).
double action_log_prob(const Eigen::Ref<const Eigen::VectorXd>& probs, const Action& action);
double branch_entropy_sum(const Eigen::Ref<const Eigen::VectorXd>& probs);

}  // namespace lfd
