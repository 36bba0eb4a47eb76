#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lfd::testing {

std::vector<double> gae_oracle(const ppo::RolloutBuffer& buffer, double gamma, double lambda) {
  const auto& tr = buffer.transitions;
  const std::size_t n = tr.size();
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const int e = tr[t].env_index;
    std::vector<std::size_t> stream;
    for (std::size_t k = t; k < n; ++k)
      if (tr[k].env_index == e) stream.push_back(k);
    double sum = 0.0;
    for (std::size_t l = 0; l < stream.size(); ++l) {
      const auto& cur = tr[stream[l]];
      double next_v = 0.0;
      if (!cur.done) next_v = l + 1 < stream.size() ? tr[stream[l + 1]].value : buffer.bootstrap_values[e];
      const double delta = cur.reward + gamma * next_v - cur.value;
      sum += std::pow(gamma * lambda, static_cast<double>(l)) * delta;
      if (cur.done) break;
    }
    adv[t] = sum;
  }
  return adv;
}

ppo::RolloutBuffer random_gae_fixture(std::mt19937_64& rng, int steps, int envs) {
  std::uniform_real_distribution<double> r(-1.0, 0.0);
  std::uniform_real_distribution<double> v(-5.0, 5.0);
  std::bernoulli_distribution done(0.2);
  ppo::RolloutBuffer b;
  for (int t = 0; t < steps; ++t) {
    ppo::Transition x;
    x.reward = r(rng);
    x.env_reward = x.reward;
    x.value = v(rng);
    x.done = done(rng);
    x.env_index = t % envs;
    b.transitions.push_back(x);
  }
  for (int e = 0; e < envs; ++e) b.bootstrap_values.push_back(v(rng));
  return b;
}

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

FdResult check_gradient(const nn::Mlp& net, const std::function<double(const nn::Mlp&)>& loss,
                        const nn::Gradients& analytic, double h, std::size_t max_coords, std::uint64_t subset_seed) {
  const std::vector<double> theta = net.flat_parameters();
  const std::vector<double> g = analytic.flat();
  std::vector<std::size_t> coords(theta.size());
  std::iota(coords.begin(), coords.end(), 0);
  if (max_coords > 0 && max_coords < coords.size()) {
    std::mt19937_64 rng(subset_seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(max_coords);
  }
  FdResult res;
  nn::Mlp probe = net;
  std::vector<double> p = theta;
  for (const std::size_t i : coords) {
    p[i] = theta[i] + h;
    probe.set_flat_parameters(p);
    const double up = loss(probe);
    p[i] = theta[i] - h;
    probe.set_flat_parameters(p);
    const double down = loss(probe);
    p[i] = theta[i];
    const double numeric = (up - down) / (2.0 * h);
    res.max_rel_error = std::max(res.max_rel_error, relative_error(g[i], numeric));
    ++res.checked;
  }
  return res;
}

Observation random_observation(std::mt19937_64& rng, const SceneConfig& scene) {
  const Box& w = scene.workspace_box;
  std::uniform_real_distribution<double> ux(w.lo.x, w.hi.x), uy(w.lo.y, w.hi.y), uz(w.lo.z, w.hi.z);
  std::bernoulli_distribution closed(0.5);
  EnvState s;
  s.ee_position = {ux(rng), uy(rng), uz(rng)};
  s.gripper_closed = closed(rng);
  return observe(s, scene);
}

Action random_action(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> c(-1, 1);
  return {{c(rng), c(rng), c(rng)}};
}

namespace {

struct PpoProblem {
  ppo::RolloutBuffer buffer;
  std::vector<double> advantages;
  std::vector<std::size_t> indices;
  Policy policy;
  nn::Mlp value;
  ppo::PpoConfig config;
};

PpoProblem make_ppo_problem(std::uint64_t seed, const std::vector<int>& hidden) {
  std::mt19937_64 rng(seed);
  PpoProblem p;
  p.config.hidden = hidden;
  p.config.entropy_coef = 0.01;
  p.config.value_coef = 0.5;
  p.policy = Policy::create(hidden, seed * 7 + 1);
  p.value = make_value_net(hidden, seed * 7 + 2);
  const SceneConfig scene;
  std::normal_distribution<double> noise(0.0, 0.1);
  std::normal_distribution<double> adv(0.0, 1.0);
  const int n = 16;
  for (int i = 0; i < n; ++i) {
    ppo::Transition t;
    t.observation = random_observation(rng, scene);
    t.action = random_action(rng);
    t.log_prob = p.policy.log_prob(t.observation, t.action) + noise(rng);
    p.buffer.transitions.push_back(t);
    p.buffer.returns.push_back(adv(rng));
    p.advantages.push_back(adv(rng));
    p.indices.push_back(static_cast<std::size_t>(i));
  }
  p.buffer.advantages = p.advantages;
  p.buffer.complete = true;
  return p;
}

}  // namespace

FdResult policy_gradient_check(std::uint64_t seed, const std::vector<int>& hidden, std::size_t max_coords) {
  const PpoProblem p = make_ppo_problem(seed, hidden);
  const auto out = ppo::ppo_loss(p.buffer, p.advantages, p.indices, p.policy, p.value, p.config);
  return check_gradient(
      p.policy.net(),
      [&](const nn::Mlp& net) {
        return ppo::ppo_loss(p.buffer, p.advantages, p.indices, Policy(net), p.value, p.config).loss;
      },
      out.policy_grads, 1e-5, max_coords, seed);
}

FdResult value_gradient_check(std::uint64_t seed, const std::vector<int>& hidden, std::size_t max_coords) {
  const PpoProblem p = make_ppo_problem(seed, hidden);
  const auto out = ppo::ppo_loss(p.buffer, p.advantages, p.indices, p.policy, p.value, p.config);
  return check_gradient(
      p.value,
      [&](const nn::Mlp& net) { return ppo::ppo_loss(p.buffer, p.advantages, p.indices, p.policy, net, p.config).loss; },
      out.value_grads, 1e-5, max_coords, seed);
}

FdResult discriminator_gradient_check(std::uint64_t seed, const std::vector<int>& hidden, std::size_t max_coords) {
  std::mt19937_64 rng(seed);
  const SceneConfig scene;
  const int n = 12;
  Eigen::MatrixXd gen(gail::kDiscriminatorInputSize, n);
  Eigen::MatrixXd exp(gail::kDiscriminatorInputSize, n + 3);
  for (int j = 0; j < gen.cols(); ++j) gen.col(j) = gail::encode_pair(random_observation(rng, scene), random_action(rng));
  for (int j = 0; j < exp.cols(); ++j) exp.col(j) = gail::encode_pair(random_observation(rng, scene), random_action(rng));
  const auto disc = gail::Discriminator::create(hidden, seed * 7 + 3);
  const auto step = gail::discriminator_loss_and_grad(disc, gen, exp, 1e-3);
  const auto bce = [&](const nn::Mlp& net) {
    const gail::Discriminator d(net);
    const Eigen::VectorXd pg = d.probabilities(gen);
    const Eigen::VectorXd pe = d.probabilities(exp);
    double l = 0.0;
    for (Eigen::Index j = 0; j < pg.size(); ++j) l -= std::log(1.0 - pg(j)) / static_cast<double>(pg.size());
    for (Eigen::Index j = 0; j < pe.size(); ++j) l -= std::log(pe(j)) / static_cast<double>(pe.size());
    return l;
  };
  return check_gradient(disc.net(), bce, step.grads, 1e-5, max_coords, seed);
}

double reward_oracle(const Vec3& ee, bool closed, const SceneConfig& scene) {
  const Vec3 d = scene.workspace_box.hi - scene.workspace_box.lo;
  const double diag = std::sqrt(d.x * d.x + d.y * d.y + d.z * d.z);
  const double k = 0.5 / diag;
  const Vec3 goal = closed ? scene.target_position : scene.tumour_center;
  const Vec3 e = ee - goal;
  const double dist = std::sqrt(e.x * e.x + e.y * e.y + e.z * e.z);
  return closed ? -k * dist : -k * dist - 0.5;
}

}  // namespace lfd::testing
