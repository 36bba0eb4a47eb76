#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lfd/env.hpp"
#include "lfd/policy.hpp"
#include "lfd/starts.hpp"

namespace lfd::eval {

struct GridSpec {
  int nx = 7;
  int nz = 7;
  StartRegion region;

  static GridSpec over_sheet(const SceneConfig& scene, int nx = 7, int nz = 7);
  // Throws ConfigError.
  void validate(const SceneConfig& scene) const;
  // Start of grid cell (i along x, j along z).
  Vec3 point(int i, int j) const;
};

struct TrialResult {
  int grid_i = 0;
  int grid_j = 0;
  Vec3 start;
  double te = 0.0;
  DoneReason done_reason = DoneReason::kNone;
  int steps = 0;
  std::optional<Vec3> grasp_position;
};

struct GridResult {
  std::vector<TrialResult> trials;  // i-major: (0,0), (0,1), ..., (nx-1, nz-1)
  double ate = 0.0;
  double success_rate = 0.0;
  double rest_te = 0.0;
};

using ActionFn = std::function<Action(const Observation&)>;

// One episode per grid point, TE measured at the end of the episode (the
// rest-scene TE when nothing was grasped).
GridResult run_grid(const SceneConfig& scene, const GridSpec& grid, const ActionFn& act);
// Greedy per branch when deterministic, otherwise sampled from `seed`.
GridResult run_grid(const SceneConfig& scene, const GridSpec& grid, const Policy& policy, bool deterministic,
                    std::uint64_t seed = 0);

// Mean TE over trials with grid_i == i.
double column_mean(const GridResult& r, int i);
double column_min(const GridResult& r, int i);

std::string heatmap_csv(const GridResult& r);
// Throws FormatError.
std::vector<TrialResult> parse_heatmap_csv(const std::string& text);

nlohmann::json summary_json(const GridResult& r, const std::string& fingerprint);

struct CurvePoint {
  std::int64_t global_step = 0;
  double mean_reward = 0.0;
};
using Curve = std::vector<CurvePoint>;

// Reads global_step and mean_episode_reward from a training metrics CSV.
// Rows where no episode finished (nan) are skipped.
Curve read_metrics_curve(const std::string& csv_text);

struct AlignedCurve {
  std::vector<double> mean;
  std::vector<double> min;
  std::vector<double> max;
  std::optional<std::int64_t> crossing;
};

struct Comparison {
  std::vector<std::int64_t> steps;
  AlignedCurve a;
  AlignedCurve b;
  // Runs did not share one checkpoint grid and were resampled.
  bool resampled = false;
  double threshold = 0.0;
};

// Aligns every run onto the union of checkpoint steps by last-value carry
// forward and reports the first step at which each method's mean across
// runs reaches `threshold`. Throws ContractViolation on an empty run list.
Comparison compare_curves(const std::vector<Curve>& a_runs, const std::vector<Curve>& b_runs, double threshold);

// global_step, <a>_mean, <a>_min, <a>_max, <b>_mean, <b>_min, <b>_max
std::string comparison_csv(const Comparison& c, const std::string& a_name, const std::string& b_name);
nlohmann::json comparison_json(const Comparison& c, const std::string& a_name, const std::string& b_name);

}  // namespace lfd::eval
