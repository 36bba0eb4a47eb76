#include "lfd/policy.hpp"

#include <cmath>

namespace lfd {

Eigen::VectorXd encode_observation(const Observation& obs) {
  Eigen::VectorXd x(kObservationSize);
  for (int i = 0; i < kObservationSize - 1; ++i) x(i) = obs[i] / kObservationScale;
  x(kObservationSize - 1) = obs[kObservationSize - 1];
  return x;
}

Eigen::VectorXd encode_action(const Action& action) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(kActionEncodingSize);
  for (int b = 0; b < kActionBranches; ++b) x(b * kBranchChoices + action.choice(b)) = 1.0;
  return x;
}

Policy::Policy(nn::Mlp net) : net_(std::move(net)) {}

Policy Policy::create(const std::vector<int>& hidden, std::uint64_t seed) {
  std::vector<int> widths{kObservationSize};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(kActionBranches * kBranchChoices);
  return Policy(nn::Mlp::orthogonal(widths, nn::Head::kSoftmax, kActionBranches, seed, 1.0, 0.01));
}

nn::Mlp make_value_net(const std::vector<int>& hidden, std::uint64_t seed) {
  std::vector<int> widths{kObservationSize};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  return nn::Mlp::orthogonal(widths, nn::Head::kLinear, 1, seed, 1.0, 1.0);
}

Eigen::VectorXd Policy::probabilities(const Observation& obs) const {
  const Eigen::VectorXd x = encode_observation(obs);
  return net_.forward(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

SampledAction Policy::sample(const Observation& obs, std::mt19937_64& rng) const {
  const Eigen::VectorXd p = probabilities(obs);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  SampledAction out;
  for (int b = 0; b < kActionBranches; ++b) {
    const double u = unif(rng);
    int choice = kBranchChoices - 1;
    double acc = 0.0;
    for (int c = 0; c < kBranchChoices; ++c) {
      acc += p(b * kBranchChoices + c);
      if (u < acc) {
        choice = c;
        break;
      }
    }
    out.action.beta[b] = choice - 1;
  }
  out.log_prob = action_log_prob(p, out.action);
  return out;
}

Action Policy::greedy(const Observation& obs) const {
  const Eigen::VectorXd p = probabilities(obs);
  Action a;
  for (int b = 0; b < kActionBranches; ++b) {
    int best = 0;
    for (int c = 1; c < kBranchChoices; ++c)
      if (p(b * kBranchChoices + c) > p(b * kBranchChoices + best)) best = c;
    a.beta[b] = best - 1;
  }
  return a;
}

double Policy::log_prob(const Observation& obs, const Action& action) const {
  return action_log_prob(probabilities(obs), action);
}

double action_log_prob(const Eigen::Ref<const Eigen::VectorXd>& probs, const Action& action) {
  double lp = 0.0;
  for (int b = 0; b < kActionBranches; ++b) lp += std::log(probs(b * kBranchChoices + action.choice(b)));
  return lp;
}

double branch_entropy_sum(const Eigen::Ref<const Eigen::VectorXd>& probs) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i)
    if (probs(i) > 0.0) h -= probs(i) * std::log(probs(i));
  return h;
}

}  // namespace lfd
