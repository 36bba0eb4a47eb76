#include "lfd/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lfd/errors.hpp"

namespace lfd::ppo {
namespace {

std::string join_ints(const std::vector<int>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + std::to_string(xs[i]);
  return s;
}

void clip_by_global_norm(nn::Gradients& g, double max_norm) {
  if (max_norm <= 0.0) return;
  const double n = std::sqrt(g.squared_norm());
  if (n > max_norm) g *= max_norm / n;
}

std::string csv_number(double v) { return std::isfinite(v) ? format_double(v) : "nan"; }

}  // namespace

void PpoConfig::validate() const {
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw ConfigError("clip_epsilon", "must be in (0, 1)");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("gamma", "must be in [0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda", "must be in [0, 1]");
  if (horizon < 1) throw ConfigError("horizon", "must be positive");
  if (epochs < 1) throw ConfigError("epochs", "must be positive");
  if (minibatch_size < 1) throw ConfigError("minibatch_size", "must be positive");
  if (value_coef < 0.0) throw ConfigError("value_coef", "must be non-negative");
  if (entropy_coef < 0.0) throw ConfigError("entropy_coef", "must be non-negative");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate", "must be positive");
  if (total_steps < 1) throw ConfigError("total_steps", "must be positive");
  if (num_envs < 1) throw ConfigError("num_envs", "must be positive");
  if (hidden.empty()) throw ConfigError("hidden", "needs at least one hidden layer");
  for (const int h : hidden)
    if (h < 1) throw ConfigError("hidden", "widths must be positive");
}

const std::vector<std::string>& PpoConfig::keys() {
  static const std::vector<std::string> k = {
      "clip_epsilon", "gamma",         "gae_lambda",  "horizon",       "epochs",
      "minibatch_size", "value_coef",  "entropy_coef", "learning_rate", "max_grad_norm",
      "total_steps",  "seed",          "num_envs",    "hidden"};
  return k;
}

void PpoConfig::write_kv(KeyValueFile& kv) const {
  kv.set("clip_epsilon", format_double(clip_epsilon));
  kv.set("gamma", format_double(gamma));
  kv.set("gae_lambda", format_double(gae_lambda));
  kv.set("horizon", std::to_string(horizon));
  kv.set("epochs", std::to_string(epochs));
  kv.set("minibatch_size", std::to_string(minibatch_size));
  kv.set("value_coef", format_double(value_coef));
  kv.set("entropy_coef", format_double(entropy_coef));
  kv.set("learning_rate", format_double(learning_rate));
  kv.set("max_grad_norm", format_double(max_grad_norm));
  kv.set("total_steps", std::to_string(total_steps));
  kv.set("seed", std::to_string(seed));
  kv.set("num_envs", std::to_string(num_envs));
  kv.set("hidden", join_ints(hidden));
}

PpoConfig PpoConfig::from_kv(const KeyValueFile& kv, PpoConfig c) {
  auto num = [&](const char* key, double& out) {
    if (kv.has(key)) out = parse_double(key, kv.get(key));
  };
  auto integer = [&](const char* key, auto& out) {
    if (kv.has(key)) out = static_cast<std::remove_reference_t<decltype(out)>>(parse_int(key, kv.get(key)));
  };
  num("clip_epsilon", c.clip_epsilon);
  num("gamma", c.gamma);
  num("gae_lambda", c.gae_lambda);
  integer("horizon", c.horizon);
  integer("epochs", c.epochs);
  integer("minibatch_size", c.minibatch_size);
  num("value_coef", c.value_coef);
  num("entropy_coef", c.entropy_coef);
  num("learning_rate", c.learning_rate);
  num("max_grad_norm", c.max_grad_norm);
  integer("total_steps", c.total_steps);
  if (kv.has("seed")) {
    const auto s = parse_int("seed", kv.get("seed"));
    if (s < 0) throw ConfigError("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  integer("num_envs", c.num_envs);
  if (kv.has("hidden")) {
    c.hidden.clear();
    for (const double h : parse_doubles("hidden", kv.get("hidden"))) {
      if (h != std::floor(h)) throw ConfigError("hidden", "widths must be integers");
      c.hidden.push_back(static_cast<int>(h));
    }
  }
  c.validate();
  return c;
}

double clip_target(double epsilon, double advantage) {
  return advantage >= 0.0 ? (1.0 + epsilon) * advantage : (1.0 - epsilon) * advantage;
}

double clipped_objective(double ratio, double advantage, double epsilon) {
  return std::min(ratio * advantage, clip_target(epsilon, advantage));
}

void compute_gae(RolloutBuffer& buffer, double gamma, double lambda) {
  const auto n = buffer.transitions.size();
  buffer.advantages.assign(n, 0.0);
  buffer.returns.assign(n, 0.0);
  const auto num_envs = buffer.bootstrap_values.size();
  std::vector<double> next_value(buffer.bootstrap_values);
  std::vector<double> next_adv(num_envs, 0.0);
  for (std::size_t k = n; k-- > 0;) {
    const auto& tr = buffer.transitions[k];
    const auto e = static_cast<std::size_t>(tr.env_index);
    if (e >= num_envs) throw ContractViolation("compute_gae: transition env index out of range");
    const double nv = tr.done ? 0.0 : next_value[e];
    const double carry = tr.done ? 0.0 : next_adv[e];
    const double delta = tr.reward + gamma * nv - tr.value;
    const double adv = delta + gamma * lambda * carry;
    buffer.advantages[k] = adv;
    buffer.returns[k] = adv + tr.value;
    next_value[e] = tr.value;
    next_adv[e] = adv;
  }
  buffer.complete = true;
}

void normalize(std::vector<double>& xs) {
  if (xs.size() < 2) return;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (const double x : xs) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(xs.size()));
  for (double& x : xs) x = (x - mean) / (sd + 1e-8);
}

LossOutput ppo_loss(const RolloutBuffer& buffer, const std::vector<double>& advantages,
                    const std::vector<std::size_t>& indices, const Policy& policy,
                    const nn::Mlp& value_net, const PpoConfig& config) {
  if (!buffer.complete) throw ContractViolation("ppo_loss: buffer has no advantages yet");
  const auto b = static_cast<Eigen::Index>(indices.size());
  Eigen::MatrixXd x(kObservationSize, b);
  for (Eigen::Index j = 0; j < b; ++j) x.col(j) = encode_observation(buffer.transitions[indices[j]].observation);

  nn::Tape ptape;
  nn::Tape vtape;
  policy.net().forward(x, ptape);
  const Eigen::MatrixXd& values = value_net.forward(x, vtape);
  const Eigen::MatrixXd& logits = ptape.logits;
  const Eigen::MatrixXd& probs = ptape.output;

  // First pass: ratios and validity.
  std::vector<double> ratio(indices.size());
  std::vector<Eigen::Matrix<double, kActionBranches * kBranchChoices, 1>> log_p(indices.size());
  std::vector<bool> valid(indices.size(), true);
  int n_valid = 0;
  LossOutput out;
  for (Eigen::Index j = 0; j < b; ++j) {
    const auto& tr = buffer.transitions[indices[j]];
    double lp_new = 0.0;
    for (int br = 0; br < kActionBranches; ++br) {
      const auto z = logits.col(j).segment(br * kBranchChoices, kBranchChoices);
      const double m = z.maxCoeff();
      const double lse = m + std::log((z.array() - m).exp().sum());
      for (int c = 0; c < kBranchChoices; ++c) log_p[j](br * kBranchChoices + c) = z(c) - lse;
      lp_new += log_p[j](br * kBranchChoices + tr.action.choice(br));
    }
    ratio[j] = std::exp(lp_new - tr.log_prob);
    if (!std::isfinite(ratio[j]) || !std::isfinite(advantages[indices[j]])) {
      valid[j] = false;
      ++out.rejected;
    } else {
      ++n_valid;
    }
  }

  Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(logits.rows(), b);
  Eigen::MatrixXd dvalues = Eigen::MatrixXd::Zero(1, b);
  if (n_valid > 0) {
    const double inv = 1.0 / n_valid;
    double obj_sum = 0.0, v_sum = 0.0, h_sum = 0.0, kl_sum = 0.0;
    int clipped = 0;
    for (Eigen::Index j = 0; j < b; ++j) {
      if (!valid[j]) continue;
      const auto& tr = buffer.transitions[indices[j]];
      const double adv = advantages[indices[j]];
      const double r = ratio[j];
      const double unclipped = r * adv;
      const double g = clip_target(config.clip_epsilon, adv);
      obj_sum += std::min(unclipped, g);
      // The clipped branch is constant in theta.
      const double dobj_dlogp = unclipped <= g ? unclipped : 0.0;
      if (unclipped > g) ++clipped;
      kl_sum += (r - 1.0) - std::log(r);

      for (int br = 0; br < kActionBranches; ++br) {
        double h = 0.0;
        for (int c = 0; c < kBranchChoices; ++c) {
          const int i = br * kBranchChoices + c;
          h -= probs(i, j) * log_p[j](i);
        }
        h_sum += h;
        for (int c = 0; c < kBranchChoices; ++c) {
          const int i = br * kBranchChoices + c;
          const double onehot = c == tr.action.choice(br) ? 1.0 : 0.0;
          const double dlogp_dz = onehot - probs(i, j);
          const double dh_dz = -probs(i, j) * (log_p[j](i) + h);
          dlogits(i, j) = inv * (-dobj_dlogp * dlogp_dz - config.entropy_coef * dh_dz);
        }
      }
      const double err = values(0, j) - buffer.returns[indices[j]];
      v_sum += err * err;
      dvalues(0, j) = inv * config.value_coef * 2.0 * err;
    }
    out.mean_objective = obj_sum * inv;
    out.value_loss = v_sum * inv;
    out.entropy = h_sum * inv;
    out.clip_fraction = clipped * inv;
    out.approx_kl = kl_sum * inv;
    out.loss = -out.mean_objective + config.value_coef * out.value_loss - config.entropy_coef * out.entropy;
  } else {
    out.loss = std::numeric_limits<double>::quiet_NaN();
  }
  out.policy_grads = policy.net().backward(ptape, dlogits, nn::GradientAt::kLogits);
  out.value_grads = value_net.backward(vtape, dvalues, nn::GradientAt::kLogits);
  return out;
}

std::string metrics_csv_header() {
  return "global_step,mean_episode_reward,env_reward_mean,value_loss,entropy,clip_fraction,"
         "gail_reward_mean,disc_acc_expert,disc_acc_gen";
}

std::string metrics_csv_line(const MetricsRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); };
  return std::to_string(r.global_step) + "," + csv_number(r.mean_episode_reward) + "," +
         csv_number(r.env_reward_mean) + "," + csv_number(r.value_loss) + "," + csv_number(r.entropy) +
         "," + csv_number(r.clip_fraction) + "," + opt(r.gail_reward_mean) + "," +
         opt(r.disc_acc_expert) + "," + opt(r.disc_acc_gen);
}

PpoTrainer::PpoTrainer(const SceneConfig& scene, PpoConfig config)
    : scene_(scene),
      config_(std::move(config)),
      starts_(StartRegion::over_sheet(scene_), config_.seed * 4 + 3) {
  config_.validate();
  scene_.validate();
  policy_ = Policy::create(config_.hidden, config_.seed * 4 + 0);
  value_net_ = make_value_net(config_.hidden, config_.seed * 4 + 1);
  policy_opt_ = nn::Adam(policy_.net(), {config_.learning_rate});
  value_opt_ = nn::Adam(value_net_, {config_.learning_rate});
  action_rng_.seed(config_.seed * 4 + 2);
  shuffle_rng_.seed(config_.seed * 4 + 5);
  for (int e = 0; e < config_.num_envs; ++e) {
    envs_.emplace_back(scene_);
    current_obs_.push_back(envs_.back().reset(starts_.next(), static_cast<std::uint64_t>(e)));
    episode_return_.push_back(0.0);
  }
}

double PpoTrainer::value(const Observation& obs) const {
  const Eigen::VectorXd x = encode_observation(obs);
  return value_net_.forward(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())))(0);
}

RolloutBuffer PpoTrainer::collect(int horizon) {
  RolloutBuffer buf;
  buf.transitions.reserve(static_cast<std::size_t>(horizon));
  const int n_env = config_.num_envs;
  std::vector<bool> last_done(static_cast<std::size_t>(n_env), false);
  for (int s = 0; s < horizon; ++s) {
    const int e = s % n_env;
    auto& env = envs_[e];
    Transition tr;
    tr.observation = current_obs_[e];
    const auto sampled = policy_.sample(tr.observation, action_rng_);
    tr.action = sampled.action;
    tr.log_prob = sampled.log_prob;
    tr.value = value(tr.observation);
    tr.env_index = e;
    const StepResult res = env.step(tr.action);
    tr.reward = res.reward;
    tr.env_reward = res.reward;
    tr.done = res.done;
    episode_return_[e] += res.reward;
    last_done[e] = res.done;
    if (res.done) {
      buf.episode_scores.push_back(episode_return_[e] / scene_.max_episode_steps);
      episode_return_[e] = 0.0;
      current_obs_[e] = env.reset(starts_.next(), static_cast<std::uint64_t>(global_step_ + s));
    } else {
      current_obs_[e] = res.observation;
    }
    buf.transitions.push_back(tr);
  }
  global_step_ += horizon;
  buf.bootstrap_values.resize(static_cast<std::size_t>(n_env));
  for (int e = 0; e < n_env; ++e) buf.bootstrap_values[e] = last_done[e] ? 0.0 : value(current_obs_[e]);
  return buf;
}

UpdateMetrics PpoTrainer::update(RolloutBuffer& buffer) {
  compute_gae(buffer, config_.gamma, config_.gae_lambda);
  std::vector<double> adv = buffer.advantages;
  normalize(adv);

  const nn::Mlp policy_backup = policy_.net();
  const nn::Mlp value_backup = value_net_;
  const nn::Adam popt_backup = policy_opt_;
  const nn::Adam vopt_backup = value_opt_;

  std::vector<std::size_t> order(buffer.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  UpdateMetrics m;
  int batches = 0;
  for (int epoch = 0; epoch < config_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng_);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config_.minibatch_size)) {
      const auto end = std::min(order.size(), start + static_cast<std::size_t>(config_.minibatch_size));
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      LossOutput lo = ppo_loss(buffer, adv, idx, policy_, value_net_, config_);
      if (!std::isfinite(lo.loss) || !lo.policy_grads.all_finite() || !lo.value_grads.all_finite()) {
        policy_.net() = policy_backup;
        value_net_ = value_backup;
        policy_opt_ = popt_backup;
        value_opt_ = vopt_backup;
        m.aborted = true;
        return m;
      }
      clip_by_global_norm(lo.policy_grads, config_.max_grad_norm);
      clip_by_global_norm(lo.value_grads, config_.max_grad_norm);
      policy_opt_.step(policy_.net(), lo.policy_grads);
      value_opt_.step(value_net_, lo.value_grads);
      m.mean_objective += lo.mean_objective;
      m.value_loss += lo.value_loss;
      m.entropy += lo.entropy;
      m.clip_fraction += lo.clip_fraction;
      m.approx_kl += lo.approx_kl;
      m.rejected += lo.rejected;
      ++batches;
    }
  }
  if (batches > 0) {
    m.mean_objective /= batches;
    m.value_loss /= batches;
    m.entropy /= batches;
    m.clip_fraction /= batches;
    m.approx_kl /= batches;
  }
  return m;
}

void train(PpoTrainer& trainer, const RewardHook& hook, const RowSink& sink) {
  while (trainer.global_step() < trainer.config().total_steps) {
    RolloutBuffer buf = trainer.collect();
    MetricsRow row;
    row.global_step = trainer.global_step();
    row.mean_episode_reward =
        buf.episode_scores.empty()
            ? std::numeric_limits<double>::quiet_NaN()
            : std::accumulate(buf.episode_scores.begin(), buf.episode_scores.end(), 0.0) /
                  static_cast<double>(buf.episode_scores.size());
    double env_sum = 0.0;
    for (const auto& tr : buf.transitions) env_sum += tr.env_reward;
    row.env_reward_mean = env_sum / static_cast<double>(buf.size());
    if (hook) hook(buf, row);
    const UpdateMetrics um = trainer.update(buf);
    row.value_loss = um.value_loss;
    row.entropy = um.entropy;
    row.clip_fraction = um.clip_fraction;
    if (sink) sink(row);
  }
}

}  // namespace lfd::ppo
