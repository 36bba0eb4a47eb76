#include "lfd/demos.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lfd/errors.hpp"

namespace lfd::demos {
namespace {

using ordered_json = nlohmann::ordered_json;

int sign_step(double delta, double step) {
  if (std::abs(delta) <= 0.5 * step) return 0;
  return delta > 0.0 ? 1 : -1;
}

ordered_json record_json(const DemoRecord& r) {
  ordered_json j;
  j["episode_id"] = r.episode_id;
  j["t"] = r.t;
  j["observation"] = r.observation;
  j["action"] = r.action.beta;
  j["done"] = r.done;
  return j;
}

DemoRecord record_from_json(const nlohmann::json& j) {
  DemoRecord r;
  r.episode_id = j.at("episode_id").get<int>();
  r.t = j.at("t").get<int>();
  const auto& obs = j.at("observation");
  if (!obs.is_array() || obs.size() != kObservationSize)
    throw FormatError("observation must have " + std::to_string(kObservationSize) + " entries");
  for (int i = 0; i < kObservationSize; ++i) r.observation[i] = obs[i].get<double>();
  const auto& act = j.at("action");
  if (!act.is_array() || act.size() != 3) throw FormatError("action must have 3 entries");
  for (int i = 0; i < 3; ++i) r.action.beta[i] = act[i].get<int>();
  if (!r.action.valid()) throw FormatError("action components must be in {-1, 0, 1}");
  r.done = j.at("done").get<bool>();
  return r;
}

}  // namespace

std::string_view to_string(Provenance p) { return p == Provenance::kScripted ? "scripted" : "teleop"; }

Provenance provenance_from_string(std::string_view s) {
  if (s == "scripted") return Provenance::kScripted;
  if (s == "teleop") return Provenance::kTeleop;
  throw FormatError("unknown provenance `" + std::string(s) + "`");
}

int DemoSet::episode_count() const {
  int n = 0;
  for (const auto& r : records)
    if (r.done) ++n;
  return n;
}

void DemoSet::validate() const {
  if (records.empty()) throw FormatError("demo set has no episodes");
  std::size_t i = 0;
  while (i < records.size()) {
    const int id = records[i].episode_id;
    int last_t = std::numeric_limits<int>::min();
    bool closed = false;
    for (; i < records.size() && records[i].episode_id == id; ++i) {
      if (closed) throw FormatError("episode " + std::to_string(id) + " has records after done");
      if (records[i].t <= last_t)
        throw FormatError("episode " + std::to_string(id) + ": t is not strictly increasing at t=" +
                          std::to_string(records[i].t));
      last_t = records[i].t;
      closed = records[i].done;
    }
    if (!closed) throw FormatError("episode " + std::to_string(id) + " does not end with done=true");
  }
}

std::vector<std::vector<DemoRecord>> DemoSet::episodes() const {
  std::vector<std::vector<DemoRecord>> out;
  for (const auto& r : records) {
    if (out.empty() || out.back().back().episode_id != r.episode_id || out.back().back().done) out.emplace_back();
    out.back().push_back(r);
  }
  return out;
}

void append_episode(DemoSet& set, std::vector<DemoRecord> episode) {
  const int id = set.records.empty() ? 0 : set.records.back().episode_id + 1;
  for (auto& r : episode) {
    r.episode_id = id;
    set.records.push_back(r);
  }
}

Vec3 grasp_waypoint(const SceneConfig& scene, const TissueState& tissue) {
  const Vec3& q = scene.tumour_center;
  Vec3 best = q;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& tri : triangulate(tissue)) {
    const Vec3 c = closest_point_on_triangle(q, tri);
    const double d = distance(c, q);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  best.y += 0.5 * scene.grasp_radius;
  return best;
}

Action expert_action(const EnvState& state, const SceneConfig& scene, const Vec3& waypoint) {
  const double s = scene.step_size;
  const Vec3& p = state.ee_position;
  Action a;
  if (state.gripper_closed) {
    const Vec3 d = scene.target_position - p;
    a.beta = {sign_step(d.x, s), sign_step(d.y, s), sign_step(d.z, s)};
    return a;
  }
  const Vec3 d = waypoint - p;
  const double lateral = std::max(std::abs(d.x), std::abs(d.z));
  int dy = 0;
  if (lateral <= std::abs(d.y)) dy = sign_step(d.y, s) == 0 ? -1 : sign_step(d.y, s);
  a.beta = {sign_step(d.x, s), dy, sign_step(d.z, s)};
  if (a.beta == std::array<int, 3>{0, 0, 0}) a.beta = {0, -1, 0};
  return a;
}

ExpertEpisode scripted_expert(TissueEnv& env, const Vec3& start, const ExpertOptions& options) {
  ExpertEpisode ep;
  env.reset(start);
  const SceneConfig& scene = env.scene();
  const Vec3 waypoint = grasp_waypoint(scene, env.state().tissue);
  std::mt19937_64 rng(options.noise_seed.value_or(0));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (!env.state().done) {
    DemoRecord r;
    r.t = env.state().t;
    r.observation = env.observation();
    r.action = expert_action(env.state(), scene, waypoint);
    if (options.noise_seed) {
      for (auto& b : r.action.beta) {
        if (unif(rng) < options.jitter_probability) b = std::clamp(b + (unif(rng) < 0.5 ? -1 : 1), -1, 1);
      }
    }
    const StepResult res = env.step(r.action);
    r.done = res.done;
    ep.records.push_back(r);
  }
  ep.done_reason = env.state().done_reason;
  ep.final_exposure = env.exposure();
  ep.ok = ep.done_reason == DoneReason::kTargetReached;
  if (!ep.ok) {
    ep.diagnostic = env.state().gripper_closed ? "grasped but did not reach the target within max_episode_steps"
                                               : "failed to grasp within max_episode_steps";
  }
  return ep;
}

DemoSet scripted_demo_set(const SceneConfig& scene, int count, std::uint64_t seed) {
  if (count < 1) throw ContractViolation("scripted_demo_set: count must be positive");
  TissueEnv env(scene);
  StartSampler starts(StartRegion::over_sheet(scene), seed);
  DemoSet set;
  set.provenance = Provenance::kScripted;
  set.fingerprint = scene.fingerprint();
  for (int i = 0; i < count; ++i) {
    const Vec3 start = starts.next();
    ExpertEpisode ep = scripted_expert(env, start);
    if (!ep.ok)
      throw ContractViolation("scripted expert episode " + std::to_string(i) + " from start (" + format_double(start.x) +
                              ", " + format_double(start.y) + ", " + format_double(start.z) + "): " + ep.diagnostic);
    append_episode(set, std::move(ep.records));
  }
  return set;
}

std::string to_jsonl(const DemoSet& set, const SceneConfig& scene) {
  if (set.episode_count() < 1) throw ContractViolation("refusing to save an empty demo set");
  set.validate();
  ordered_json header;
  header["version"] = kFormatVersion;
  header["provenance"] = std::string(to_string(set.provenance));
  header["fingerprint"] = set.fingerprint;
  ordered_json sj = ordered_json::object();
  const KeyValueFile scene_kv = scene.to_kv();
  for (const auto& [k, v] : scene_kv.entries()) sj[k] = v;
  header["scene"] = sj;
  std::string out = header.dump() + "\n";
  for (const auto& r : set.records) out += record_json(r).dump() + "\n";
  return out;
}

void save(const DemoSet& set, const SceneConfig& scene, const std::string& path) {
  const std::string text = to_jsonl(set, scene);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write demo file " + path);
  f << text;
  if (!f) throw IoError("write failed for " + path);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read demo file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

nlohmann::json parse_line(const std::string& line, int lineno) {
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
  }
}

}  // namespace

DemoSet parse_jsonl(const std::string& text, const std::optional<std::string>& expected_fingerprint,
                    bool allow_mismatch) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  DemoSet set;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const nlohmann::json j = parse_line(line, lineno);
    try {
      if (!have_header) {
        if (j.at("version").get<int>() != kFormatVersion)
          throw FormatError("unsupported demo format version");
        set.provenance = provenance_from_string(j.at("provenance").get<std::string>());
        set.fingerprint = j.at("fingerprint").get<std::string>();
        have_header = true;
        continue;
      }
      set.records.push_back(record_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_header) throw FormatError("line 1: missing header");
  set.validate();
  if (expected_fingerprint && *expected_fingerprint != set.fingerprint && !allow_mismatch)
    throw FingerprintMismatch("demo file was recorded under scene " + set.fingerprint + ", current scene is " +
                              *expected_fingerprint + " (pass the override flag to use it anyway)");
  return set;
}

DemoSet load(const std::string& path, const std::optional<std::string>& expected_fingerprint, bool allow_mismatch) {
  return parse_jsonl(read_file(path), expected_fingerprint, allow_mismatch);
}

SceneConfig header_scene(const std::string& path) {
  const std::string text = read_file(path);
  const std::string first = text.substr(0, text.find('\n'));
  const nlohmann::json j = parse_line(first, 1);
  KeyValueFile kv;
  try {
    for (const auto& [k, v] : j.at("scene").items()) kv.set(k, v.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("line 1: ") + e.what());
  }
  return SceneConfig::from_kv(kv);
}

ReplayReport replay(const DemoSet& set, TissueEnv& env) {
  ReplayReport rep;
  for (const auto& episode : set.episodes()) {
    const auto& first = episode.front().observation;
    Observation obs = env.reset({first[0], first[1], first[2]});
    for (const auto& r : episode) {
      for (int i = 0; i < kObservationSize; ++i) {
        const double dev = std::abs(obs[i] - r.observation[i]);
        if (!(dev <= rep.max_deviation)) {
          rep.max_deviation = std::isnan(dev) ? std::numeric_limits<double>::infinity() : dev;
          rep.worst_episode = r.episode_id;
          rep.worst_step = r.t;
        }
      }
      if (env.state().done) {
        rep.done_mismatch = true;
        break;
      }
      const StepResult res = env.step(r.action);
      obs = res.observation;
      ++rep.steps;
      if (res.done != r.done) {
        rep.done_mismatch = true;
        break;
      }
    }
    ++rep.episodes;
  }
  return rep;
}

RecordingSession::RecordingSession(SceneConfig scene, Vec3 start, int reposition_delay)
    : scene_(std::move(scene)), env_(scene_), reposition_delay_(reposition_delay) {
  if (reposition_delay < 0) throw ConfigError("reposition_delay", "must be non-negative");
  completed_.provenance = Provenance::kTeleop;
  completed_.fingerprint = scene_.fingerprint();
  begin_episode(start);
}

void RecordingSession::begin_episode(const Vec3& start) {
  env_.reset(start);
  current_.clear();
  phase_ = Phase::kActive;
  delay_remaining_ = 0;
  cursor_ = start;
}

RecordingSession::Tick RecordingSession::apply(const Action& action) {
  if (!action.valid()) throw ContractViolation("action components must be in {-1, 0, +1}");
  Tick tick;
  if (phase_ == Phase::kRepositioning) {
    Vec3 c = cursor_;
    for (int a = 0; a < 3; ++a) c[a] += scene_.step_size * action.beta[a];
    c = scene_.workspace_box.clamp(c);
    if (c.y > scene_.sheet_center.y) cursor_ = c;
    if (--delay_remaining_ <= 0) begin_episode(cursor_);
    return tick;
  }
  DemoRecord r;
  r.t = env_.state().t;
  r.observation = env_.observation();
  r.action = action;
  const StepResult res = env_.step(action);
  r.done = res.done;
  current_.push_back(r);
  tick.stepped = true;
  tick.reward = res.reward;
  if (res.done) {
    tick.episode_finished = true;
    tick.done_reason = env_.state().done_reason;
    append_episode(completed_, std::move(current_));
    current_.clear();
    cursor_ = env_.state().ee_position;
    if (cursor_.y <= scene_.sheet_center.y) cursor_.y = scene_.sheet_center.y + scene_.step_size;
    phase_ = Phase::kRepositioning;
    delay_remaining_ = reposition_delay_;
    if (delay_remaining_ == 0) begin_episode(cursor_);
  }
  return tick;
}

void RecordingSession::reset(std::optional<Vec3> start) {
  Vec3 s = start.value_or(env_.state().ee_position);
  if (s.y <= scene_.sheet_center.y) s.y = scene_.sheet_center.y + scene_.step_size;
  begin_episode(s);
}

}  // namespace lfd::demos
