#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lfd/demos.hpp"
#include "lfd/nn/adam.hpp"
#include "lfd/ppo.hpp"

namespace lfd::gail {

struct GailConfig {
  double alpha = 0.2;
  double beta = 0.8;
  double disc_learning_rate = 3e-4;
  int disc_epochs = 1;
  double delta = 1e-3;
  int demo_batch_size = 256;
  std::vector<int> disc_hidden{128, 128};

  void validate() const;
  void write_kv(KeyValueFile& kv) const;
  static GailConfig from_kv(const KeyValueFile& kv, GailConfig base);
  static GailConfig from_kv(const KeyValueFile& kv) { return from_kv(kv, GailConfig{}); }
  static const std::vector<std::string>& keys();
};

inline constexpr int kDiscriminatorInputSize = kObservationSize + kActionEncodingSize;

Eigen::VectorXd encode_pair(const Observation& obs, const Action& action);

// D(s, a): probability that the pair came from the expert.
class Discriminator {
 public:
  Discriminator() = default;
  explicit Discriminator(nn::Mlp net);
  static Discriminator create(const std::vector<int>& hidden, std::uint64_t seed);

  double probability(const Observation& obs, const Action& action) const;
  // Inputs as columns of encode_pair.
  Eigen::VectorXd probabilities(const Eigen::MatrixXd& pairs) const;

  const nn::Mlp& net() const { return net_; }
  nn::Mlp& net() { return net_; }

 private:
  nn::Mlp net_;
};

// mean_gen log D + mean_exp log(1 - D), D clamped to [delta, 1 - delta].
// Throws ContractViolation on an empty batch.
double discriminator_loss(const std::vector<double>& d_gen, const std::vector<double>& d_exp, double delta);

struct DiscriminatorStep {
  double loss = 0.0;
  double acc_expert = 0.0;
  double acc_gen = 0.0;
  nn::Gradients grads;
};

// One training step's worth of work on a pair of batches (columns of
// encode_pair). `loss` is discriminator_loss; `grads` is the gradient of the
// binary cross-entropy -mean_gen log(1 - D) - mean_exp log D, which has the
// same minimizer but does not saturate when D is confidently wrong.
DiscriminatorStep discriminator_loss_and_grad(const Discriminator& d, const Eigen::MatrixXd& gen,
                                              const Eigen::MatrixXd& expert, double delta);

// max(ln clamp(D, delta, 1), -1).
double gail_reward(double d, double delta = 1e-3);
double mixed_reward(double r_env, double r_gail, const GailConfig& config);

struct GailMetrics {
  double loss = 0.0;
  double acc_expert = 0.0;
  double acc_gen = 0.0;
  double gail_reward_mean = 0.0;
};

// Expert (s, a) pairs, pre-encoded.
class ExpertPool {
 public:
  explicit ExpertPool(const demos::DemoSet& set);
  std::size_t size() const { return static_cast<std::size_t>(pairs_.cols()); }
  const Eigen::MatrixXd& pairs() const { return pairs_; }

 private:
  Eigen::MatrixXd pairs_;
};

// Discriminator training plus buffer reward rewriting.
class GailLearner {
 public:
  GailLearner(GailConfig config, const demos::DemoSet& demos, std::uint64_t seed);

  // disc_epochs passes over the buffer in balanced generator/expert
  // minibatches, then rewrites every transition's reward with the mixed
  // reward. With beta == 0 nothing is trained and rewards are untouched.
  GailMetrics update(ppo::RolloutBuffer& buffer, int minibatch_size);

  // Hook for ppo::train; fills the GAIL metric columns unless beta == 0.
  ppo::RewardHook hook(int minibatch_size);

  const Discriminator& discriminator() const { return disc_; }
  Discriminator& discriminator() { return disc_; }
  const GailConfig& config() const { return config_; }

 private:
  GailConfig config_;
  ExpertPool pool_;
  Discriminator disc_;
  nn::Adam opt_;
  std::mt19937_64 rng_;
};

}  // namespace lfd::gail
