#include "lfd/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include "lfd/errors.hpp"
#include "lfd/kv_file.hpp"

namespace lfd::eval {
namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double csv_double(const std::string& s, int lineno) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  try {
    return parse_double("csv", s);
  } catch (const ConfigError&) {
    throw FormatError("line " + std::to_string(lineno) + ": bad number `" + s + "`");
  }
}

}  // namespace

GridSpec GridSpec::over_sheet(const SceneConfig& scene, int nx, int nz) {
  GridSpec g;
  g.nx = nx;
  g.nz = nz;
  g.region = StartRegion::over_sheet(scene);
  return g;
}

void GridSpec::validate(const SceneConfig& scene) const {
  if (nx < 1 || nz < 1) throw ConfigError("grid", "dimensions must be at least 1x1");
  if (region.x_min > region.x_max || region.z_min > region.z_max) throw ConfigError("grid", "empty region");
  const auto& box = scene.workspace_box;
  for (const Vec3 c : {Vec3{region.x_min, region.y, region.z_min}, Vec3{region.x_max, region.y, region.z_max}})
    if (!box.contains(c)) throw ConfigError("grid", "region leaves the workspace");
  if (region.y <= scene.sheet_center.y) throw ConfigError("grid", "start height must be above the sheet");
}

Vec3 GridSpec::point(int i, int j) const {
  const double fx = nx > 1 ? static_cast<double>(i) / (nx - 1) : 0.5;
  const double fz = nz > 1 ? static_cast<double>(j) / (nz - 1) : 0.5;
  return {region.x_min + fx * (region.x_max - region.x_min), region.y,
          region.z_min + fz * (region.z_max - region.z_min)};
}

GridResult run_grid(const SceneConfig& scene, const GridSpec& grid, const ActionFn& act) {
  grid.validate(scene);
  TissueEnv env(scene);
  GridResult out;
  out.rest_te = env.rest_exposure();
  int successes = 0;
  double sum = 0.0;
  for (int i = 0; i < grid.nx; ++i) {
    for (int j = 0; j < grid.nz; ++j) {
      TrialResult tr;
      tr.grid_i = i;
      tr.grid_j = j;
      tr.start = grid.point(i, j);
      Observation obs = env.reset(tr.start);
      while (!env.state().done) {
        const bool was_closed = env.state().gripper_closed;
        obs = env.step(act(obs)).observation;
        if (!was_closed && env.state().gripper_closed) tr.grasp_position = env.state().ee_position;
      }
      tr.steps = env.state().t;
      tr.done_reason = env.state().done_reason;
      tr.te = env.state().gripper_closed ? env.exposure() : out.rest_te;
      if (tr.done_reason == DoneReason::kTargetReached) ++successes;
      sum += tr.te;
      out.trials.push_back(tr);
    }
  }
  const double n = static_cast<double>(out.trials.size());
  out.ate = sum / n;
  out.success_rate = successes / n;
  return out;
}

GridResult run_grid(const SceneConfig& scene, const GridSpec& grid, const Policy& policy, bool deterministic,
                    std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  if (deterministic) return run_grid(scene, grid, [&](const Observation& o) { return policy.greedy(o); });
  return run_grid(scene, grid, [&](const Observation& o) { return policy.sample(o, rng).action; });
}

double column_mean(const GridResult& r, int i) {
  double s = 0.0;
  int n = 0;
  for (const auto& t : r.trials)
    if (t.grid_i == i) {
      s += t.te;
      ++n;
    }
  if (n == 0) throw ContractViolation("column_mean: empty column");
  return s / n;
}

double column_min(const GridResult& r, int i) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& t : r.trials)
    if (t.grid_i == i) m = std::min(m, t.te);
  if (!std::isfinite(m)) throw ContractViolation("column_min: empty column");
  return m;
}

std::string heatmap_csv(const GridResult& r) {
  std::string out = "grid_i,grid_j,x_mm,z_mm,te,done_reason\n";
  for (const auto& t : r.trials) {
    out += std::to_string(t.grid_i) + "," + std::to_string(t.grid_j) + "," + format_double(t.start.x) + "," +
           format_double(t.start.z) + "," + format_double(t.te) + "," + std::string(to_string(t.done_reason)) + "\n";
  }
  return out;
}

std::vector<TrialResult> parse_heatmap_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::vector<TrialResult> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "grid_i,grid_j,x_mm,z_mm,te,done_reason") throw FormatError("line 1: unexpected heatmap header");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 6) throw FormatError("line " + std::to_string(lineno) + ": expected 6 fields");
    TrialResult t;
    try {
      t.grid_i = static_cast<int>(parse_int("grid_i", f[0]));
      t.grid_j = static_cast<int>(parse_int("grid_j", f[1]));
    } catch (const ConfigError& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    t.start.x = csv_double(f[2], lineno);
    t.start.z = csv_double(f[3], lineno);
    t.te = csv_double(f[4], lineno);
    t.done_reason = done_reason_from_string(f[5]);
    out.push_back(t);
  }
  return out;
}

nlohmann::json summary_json(const GridResult& r, const std::string& fingerprint) {
  nlohmann::ordered_json j;
  j["ate"] = r.ate;
  j["n_trials"] = r.trials.size();
  j["success_rate"] = r.success_rate;
  j["rest_te"] = r.rest_te;
  j["config_fingerprint"] = fingerprint;
  return nlohmann::json::parse(j.dump());
}

Curve read_metrics_curve(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  int lineno = 0;
  int step_col = -1;
  int reward_col = -1;
  Curve out;
  while (std::getline(in, line)) {
    ++lineno;
    const auto f = split(line, ',');
    if (lineno == 1) {
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == "global_step") step_col = static_cast<int>(i);
        if (f[i] == "mean_episode_reward") reward_col = static_cast<int>(i);
      }
      if (step_col < 0 || reward_col < 0)
        throw FormatError("line 1: metrics header lacks global_step or mean_episode_reward");
      continue;
    }
    if (line.empty()) continue;
    if (static_cast<int>(f.size()) <= std::max(step_col, reward_col))
      throw FormatError("line " + std::to_string(lineno) + ": too few fields");
    const double v = csv_double(f[reward_col], lineno);
    if (std::isnan(v)) continue;
    CurvePoint p;
    try {
      p.global_step = parse_int("global_step", f[step_col]);
    } catch (const ConfigError& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
    p.mean_reward = v;
    out.push_back(p);
  }
  return out;
}

namespace {

double value_at(const Curve& c, std::int64_t step) {
  double v = c.front().mean_reward;
  for (const auto& p : c) {
    if (p.global_step > step) break;
    v = p.mean_reward;
  }
  return v;
}

AlignedCurve align(const std::vector<Curve>& runs, const std::vector<std::int64_t>& steps, double threshold) {
  AlignedCurve a;
  for (const auto s : steps) {
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& r : runs) {
      const double v = value_at(r, s);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double mean = sum / static_cast<double>(runs.size());
    a.mean.push_back(mean);
    a.min.push_back(lo);
    a.max.push_back(hi);
    if (!a.crossing && mean >= threshold) a.crossing = s;
  }
  return a;
}

}  // namespace

Comparison compare_curves(const std::vector<Curve>& a_runs, const std::vector<Curve>& b_runs, double threshold) {
  if (a_runs.empty() || b_runs.empty()) throw ContractViolation("compare_curves: no runs");
  std::set<std::int64_t> all;
  std::set<std::int64_t> first;
  bool first_set = false;
  Comparison c;
  for (const auto* group : {&a_runs, &b_runs}) {
    for (const auto& r : *group) {
      if (r.empty()) throw ContractViolation("compare_curves: a run has no finished episodes");
      std::set<std::int64_t> mine;
      for (const auto& p : r) mine.insert(p.global_step);
      if (!first_set) {
        first = mine;
        first_set = true;
      } else if (mine != first) {
        c.resampled = true;
      }
      all.insert(mine.begin(), mine.end());
    }
  }
  c.steps.assign(all.begin(), all.end());
  c.threshold = threshold;
  c.a = align(a_runs, c.steps, threshold);
  c.b = align(b_runs, c.steps, threshold);
  return c;
}

std::string comparison_csv(const Comparison& c, const std::string& a, const std::string& b) {
  std::string out = "global_step," + a + "_mean," + a + "_min," + a + "_max," + b + "_mean," + b + "_min," + b + "_max\n";
  for (std::size_t i = 0; i < c.steps.size(); ++i) {
    out += std::to_string(c.steps[i]) + "," + format_double(c.a.mean[i]) + "," + format_double(c.a.min[i]) + "," +
           format_double(c.a.max[i]) + "," + format_double(c.b.mean[i]) + "," + format_double(c.b.min[i]) + "," +
           format_double(c.b.max[i]) + "\n";
  }
  return out;
}

nlohmann::json comparison_json(const Comparison& c, const std::string& a, const std::string& b) {
  nlohmann::json j;
  j["threshold"] = c.threshold;
  j["resampled"] = c.resampled;
  j[a + "_crossing_step"] = c.a.crossing ? nlohmann::json(*c.a.crossing) : nlohmann::json(nullptr);
  j[b + "_crossing_step"] = c.b.crossing ? nlohmann::json(*c.b.crossing) : nlohmann::json(nullptr);
  return j;
}

}  // namespace lfd::eval
