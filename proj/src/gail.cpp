#include "lfd/gail.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lfd/errors.hpp"

namespace lfd::gail {

void GailConfig::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("alpha", "must be non-negative");
  if (!(beta >= 0.0)) throw ConfigError("beta", "must be non-negative");
  if (!(disc_learning_rate > 0.0)) throw ConfigError("disc_learning_rate", "must be positive");
  if (disc_epochs < 0) throw ConfigError("disc_epochs", "must be non-negative");
  if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("delta", "must be in (0, 0.5)");
  if (demo_batch_size < 1) throw ConfigError("demo_batch_size", "must be positive");
  if (disc_hidden.empty()) throw ConfigError("disc_hidden", "needs at least one hidden layer");
  for (const int h : disc_hidden)
    if (h < 1) throw ConfigError("disc_hidden", "widths must be positive");
}

const std::vector<std::string>& GailConfig::keys() {
  static const std::vector<std::string> k = {"alpha",          "beta",           "disc_learning_rate",
                                             "disc_epochs",    "delta",          "demo_batch_size",
                                             "disc_hidden"};
  return k;
}

void GailConfig::write_kv(KeyValueFile& kv) const {
  kv.set("alpha", format_double(alpha));
  kv.set("beta", format_double(beta));
  kv.set("disc_learning_rate", format_double(disc_learning_rate));
  kv.set("disc_epochs", std::to_string(disc_epochs));
  kv.set("delta", format_double(delta));
  kv.set("demo_batch_size", std::to_string(demo_batch_size));
  std::string h;
  for (std::size_t i = 0; i < disc_hidden.size(); ++i) h += (i ? ", " : "") + std::to_string(disc_hidden[i]);
  kv.set("disc_hidden", h);
}

GailConfig GailConfig::from_kv(const KeyValueFile& kv, GailConfig c) {
  if (kv.has("alpha")) c.alpha = parse_double("alpha", kv.get("alpha"));
  if (kv.has("beta")) c.beta = parse_double("beta", kv.get("beta"));
  if (kv.has("disc_learning_rate")) c.disc_learning_rate = parse_double("disc_learning_rate", kv.get("disc_learning_rate"));
  if (kv.has("disc_epochs")) c.disc_epochs = static_cast<int>(parse_int("disc_epochs", kv.get("disc_epochs")));
  if (kv.has("delta")) c.delta = parse_double("delta", kv.get("delta"));
  if (kv.has("demo_batch_size"))
    c.demo_batch_size = static_cast<int>(parse_int("demo_batch_size", kv.get("demo_batch_size")));
  if (kv.has("disc_hidden")) {
    c.disc_hidden.clear();
    for (const double h : parse_doubles("disc_hidden", kv.get("disc_hidden"))) {
      if (h != std::floor(h)) throw ConfigError("disc_hidden", "widths must be integers");
      c.disc_hidden.push_back(static_cast<int>(h));
    }
  }
  c.validate();
  return c;
}

Eigen::VectorXd encode_pair(const Observation& obs, const Action& action) {
  Eigen::VectorXd x(kDiscriminatorInputSize);
  x.head(kObservationSize) = encode_observation(obs);
  x.tail(kActionEncodingSize) = encode_action(action);
  return x;
}

Discriminator::Discriminator(nn::Mlp net) : net_(std::move(net)) {
  if (net_.head() != nn::Head::kSigmoid || net_.input_size() != kDiscriminatorInputSize || net_.output_size() != 1)
    throw std::invalid_argument("discriminator needs a sigmoid net with one output over state-action pairs");
}

Discriminator Discriminator::create(const std::vector<int>& hidden, std::uint64_t seed) {
  std::vector<int> widths{kDiscriminatorInputSize};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(1);
  return Discriminator(nn::Mlp::orthogonal(widths, nn::Head::kSigmoid, 1, seed, 1.0, 1.0));
}

double Discriminator::probability(const Observation& obs, const Action& action) const {
  const Eigen::VectorXd x = encode_pair(obs, action);
  return net_.forward(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())))(0);
}

Eigen::VectorXd Discriminator::probabilities(const Eigen::MatrixXd& pairs) const {
  return net_.forward_batch(pairs).row(0).transpose();
}

double discriminator_loss(const std::vector<double>& d_gen, const std::vector<double>& d_exp, double delta) {
  if (d_gen.empty() || d_exp.empty()) throw ContractViolation("discriminator_loss: empty batch");
  double g = 0.0;
  for (const double d : d_gen) g += std::log(std::clamp(d, delta, 1.0 - delta));
  double e = 0.0;
  for (const double d : d_exp) e += std::log(1.0 - std::clamp(d, delta, 1.0 - delta));
  return g / static_cast<double>(d_gen.size()) + e / static_cast<double>(d_exp.size());
}

DiscriminatorStep discriminator_loss_and_grad(const Discriminator& d, const Eigen::MatrixXd& gen,
                                              const Eigen::MatrixXd& expert, double delta) {
  if (gen.cols() == 0 || expert.cols() == 0) throw ContractViolation("discriminator_loss: empty batch");
  const Eigen::Index ng = gen.cols();
  const Eigen::Index ne = expert.cols();
  Eigen::MatrixXd x(gen.rows(), ng + ne);
  x << gen, expert;
  nn::Tape tape;
  const Eigen::MatrixXd& out = d.net().forward(x, tape);

  DiscriminatorStep step;
  std::vector<double> dg(static_cast<std::size_t>(ng));
  std::vector<double> de(static_cast<std::size_t>(ne));
  Eigen::MatrixXd dz(1, ng + ne);
  int correct_gen = 0;
  int correct_exp = 0;
  for (Eigen::Index j = 0; j < ng + ne; ++j) {
    const double p = out(0, j);
    if (j < ng) {
      dg[j] = p;
      if (p < 0.5) ++correct_gen;
      // d/dz -log(1 - sigmoid(z)) = p
      dz(0, j) = p / static_cast<double>(ng);
    } else {
      de[j - ng] = p;
      if (p > 0.5) ++correct_exp;
      // d/dz -log sigmoid(z) = p - 1
      dz(0, j) = (p - 1.0) / static_cast<double>(ne);
    }
  }
  step.loss = discriminator_loss(dg, de, delta);
  step.acc_gen = static_cast<double>(correct_gen) / static_cast<double>(ng);
  step.acc_expert = static_cast<double>(correct_exp) / static_cast<double>(ne);
  step.grads = d.net().backward(tape, dz, nn::GradientAt::kLogits);
  return step;
}

double gail_reward(double d, double delta) { return std::max(std::log(std::clamp(d, delta, 1.0)), -1.0); }

double mixed_reward(double r_env, double r_gail, const GailConfig& config) {
  return config.alpha * r_env + config.beta * r_gail;
}

ExpertPool::ExpertPool(const demos::DemoSet& set) {
  if (set.records.empty()) throw ContractViolation("GAIL needs at least one demonstration");
  pairs_.resize(kDiscriminatorInputSize, static_cast<Eigen::Index>(set.records.size()));
  for (std::size_t i = 0; i < set.records.size(); ++i)
    pairs_.col(static_cast<Eigen::Index>(i)) = encode_pair(set.records[i].observation, set.records[i].action);
}

GailLearner::GailLearner(GailConfig config, const demos::DemoSet& demos, std::uint64_t seed)
    : config_(std::move(config)), pool_(demos), rng_(seed * 4 + 7) {
  config_.validate();
  disc_ = Discriminator::create(config_.disc_hidden, seed * 4 + 6);
  opt_ = nn::Adam(disc_.net(), {config_.disc_learning_rate});
}

GailMetrics GailLearner::update(ppo::RolloutBuffer& buffer, int minibatch_size) {
  GailMetrics m;
  if (config_.beta == 0.0) {
    for (auto& tr : buffer.transitions) tr.reward = mixed_reward(tr.env_reward, 0.0, config_);
    return m;
  }
  const auto n = static_cast<Eigen::Index>(buffer.size());
  if (n == 0) throw ContractViolation("gail update on an empty buffer");
  Eigen::MatrixXd gen(kDiscriminatorInputSize, n);
  for (Eigen::Index i = 0; i < n; ++i)
    gen.col(i) = encode_pair(buffer.transitions[i].observation, buffer.transitions[i].action);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::uniform_int_distribution<Eigen::Index> pick(0, static_cast<Eigen::Index>(pool_.size()) - 1);
  const auto mb = static_cast<Eigen::Index>(std::max(1, minibatch_size));
  const auto eb = static_cast<Eigen::Index>(config_.demo_batch_size);
  int batches = 0;
  for (int epoch = 0; epoch < config_.disc_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_);
    for (Eigen::Index s = 0; s < n; s += mb) {
      const Eigen::Index cnt = std::min(mb, n - s);
      Eigen::MatrixXd g(kDiscriminatorInputSize, cnt);
      for (Eigen::Index j = 0; j < cnt; ++j) g.col(j) = gen.col(order[static_cast<std::size_t>(s + j)]);
      Eigen::MatrixXd e(kDiscriminatorInputSize, eb);
      for (Eigen::Index j = 0; j < eb; ++j) e.col(j) = pool_.pairs().col(pick(rng_));
      DiscriminatorStep st = discriminator_loss_and_grad(disc_, g, e, config_.delta);
      if (!std::isfinite(st.loss) || !st.grads.all_finite()) continue;
      opt_.step(disc_.net(), st.grads);
      m.loss += st.loss;
      m.acc_gen += st.acc_gen;
      m.acc_expert += st.acc_expert;
      ++batches;
    }
  }
  if (batches > 0) {
    m.loss /= batches;
    m.acc_gen /= batches;
    m.acc_expert /= batches;
  }

  const Eigen::VectorXd d = disc_.probabilities(gen);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto& tr = buffer.transitions[i];
    const double rg = gail_reward(d(i), config_.delta);
    sum += rg;
    tr.reward = mixed_reward(tr.env_reward, rg, config_);
  }
  m.gail_reward_mean = sum / static_cast<double>(n);
  return m;
}

ppo::RewardHook GailLearner::hook(int minibatch_size) {
  return [this, minibatch_size](ppo::RolloutBuffer& buffer, ppo::MetricsRow& row) {
    const GailMetrics m = update(buffer, minibatch_size);
    if (config_.beta == 0.0) return;
    row.gail_reward_mean = m.gail_reward_mean;
    row.disc_acc_expert = m.acc_expert;
    row.disc_acc_gen = m.acc_gen;
  };
}

}  // namespace lfd::gail
