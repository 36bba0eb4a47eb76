#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lfd/checkpoint.hpp"
#include "lfd/gail.hpp"
#include "lfd/kv_file.hpp"
#include "lfd/ppo.hpp"
#include "lfd/scene.hpp"

namespace lfd {

// Everything a training invocation needs, resolved from (lowest to highest
// precedence) the scene profile, a config file and command-line overrides.
struct RunConfig {
  std::string algorithm = "ppo";
  std::optional<std::string> demos_path;
  std::vector<std::uint64_t> seeds{1};
  bool desk_scale = false;
  bool allow_fingerprint_mismatch = false;
  SceneConfig scene;
  ppo::PpoConfig ppo;
  gail::GailConfig gail;

  // Run-level keys accepted in config files besides scene/PPO/GAIL keys.
  static const std::vector<std::string>& run_keys();
  // Every accepted key.
  static std::vector<std::string> all_keys();

  // Throws ConfigError naming the field (unknown keys included).
  static RunConfig resolve(const KeyValueFile& merged);
  // Frozen effective config: every key materialized.
  KeyValueFile to_kv() const;
  void validate() const;
};

// `overrides` entries win over `base` entries.
KeyValueFile merge(const KeyValueFile& base, const KeyValueFile& overrides);

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& text);

struct SeedRun {
  std::uint64_t seed = 0;
  std::string metrics_path;
  std::string checkpoint_path;
  std::int64_t steps = 0;
};

using ProgressFn = std::function<void(std::uint64_t seed, const ppo::MetricsRow&)>;

// Trains one seed; rows go to `sink` in order. The returned checkpoint holds
// the final networks.
struct TrainedModel {
  Checkpoint checkpoint;
  std::vector<ppo::MetricsRow> rows;
};
TrainedModel train_seed(const RunConfig& cfg, std::uint64_t seed, const demos::DemoSet* demos,
                        const ProgressFn& progress = {});

// Writes <out>/config.kv, <out>/seeds.csv and <out>/seed_<n>/{metrics.csv,
// checkpoint.json}. Refuses (IoError) a non-empty existing directory unless
// `overwrite`. GAIL demos are loaded through the fingerprint gate.
std::vector<SeedRun> train_runs(const RunConfig& cfg, const std::string& out_dir, bool overwrite,
                                const ProgressFn& progress = {});

std::string metrics_csv(const std::vector<ppo::MetricsRow>& rows);

}  // namespace lfd
