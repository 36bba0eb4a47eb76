#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lfd/env.hpp"
#include "lfd/starts.hpp"

namespace lfd::demos {

inline constexpr int kFormatVersion = 1;

struct DemoRecord {
  int episode_id = 0;
  int t = 0;
  Observation observation{};
  Action action;
  bool done = false;

  friend bool operator==(const DemoRecord&, const DemoRecord&) = default;
};

enum class Provenance { kScripted, kTeleop };
std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct DemoSet {
  std::vector<DemoRecord> records;
  Provenance provenance = Provenance::kScripted;
  std::string fingerprint;

  int episode_count() const;
  // Throws FormatError naming the broken invariant.
  void validate() const;
  // Records grouped per episode, in file order.
  std::vector<std::vector<DemoRecord>> episodes() const;

  friend bool operator==(const DemoSet&, const DemoSet&) = default;
};

// Appends one episode, renumbering its records with the next episode id.
void append_episode(DemoSet& set, std::vector<DemoRecord> episode);

struct ExpertOptions {
  // Jitter is off unless a seed is given.
  std::optional<std::uint64_t> noise_seed;
  double jitter_probability = 0.1;
};

struct ExpertEpisode {
  std::vector<DemoRecord> records;
  bool ok = false;
  DoneReason done_reason = DoneReason::kNone;
  double final_exposure = 0.0;
  std::string diagnostic;
};

// Sheet surface point closest to the tumour centre, raised by half the grasp radius.
Vec3 grasp_waypoint(const SceneConfig& scene, const TissueState& tissue);

// Per-axis sign of the remaining delta, zero within half a step.
Action expert_action(const EnvState& state, const SceneConfig& scene, const Vec3& waypoint);

// Runs the scripted oracle from `start` until the episode ends. `ok` is false
// (with a diagnostic) when it never grasped or never reached the target.
ExpertEpisode scripted_expert(TissueEnv& env, const Vec3& start, const ExpertOptions& options = {});

// `count` expert episodes from seeded uniform starts over the sheet. Throws
// ContractViolation if any episode fails.
DemoSet scripted_demo_set(const SceneConfig& scene, int count, std::uint64_t seed);

// Line-delimited JSON. Throws ContractViolation on an empty set, IoError on
// unwritable/unreadable paths, FormatError with the line number on corrupt
// content, FingerprintMismatch when `expected_fingerprint` is given, differs
// from the file and `allow_mismatch` is false.
void save(const DemoSet& set, const SceneConfig& scene, const std::string& path);
std::string to_jsonl(const DemoSet& set, const SceneConfig& scene);
DemoSet load(const std::string& path, const std::optional<std::string>& expected_fingerprint = std::nullopt,
             bool allow_mismatch = false);
DemoSet parse_jsonl(const std::string& text, const std::optional<std::string>& expected_fingerprint = std::nullopt,
                    bool allow_mismatch = false);
// Scene embedded in a demo file header.
SceneConfig header_scene(const std::string& path);

struct ReplayReport {
  int episodes = 0;
  int steps = 0;
  double max_deviation = 0.0;
  int worst_episode = -1;
  int worst_step = -1;
  bool done_mismatch = false;
  bool ok(double tolerance = 1e-9) const { return !done_mismatch && max_deviation <= tolerance; }
};

// Re-executes every episode from its recorded start and measures the largest
// absolute observation deviation.
ReplayReport replay(const DemoSet& set, TissueEnv& env);

// Live recording driven by an external action source (the teleop service).
// During the repositioning delay actions move a cursor instead of the robot;
// the next episode starts where the cursor ends up.
class RecordingSession {
 public:
  RecordingSession(SceneConfig scene, Vec3 start, int reposition_delay = 20);

  enum class Phase { kActive, kRepositioning };

  struct Tick {
    bool stepped = false;
    double reward = 0.0;
    bool episode_finished = false;
    DoneReason done_reason = DoneReason::kNone;
  };

  // One control tick.
  Tick apply(const Action& action);
  // Drops the current episode and starts a new one at `start` (or where the
  // robot currently is).
  void reset(std::optional<Vec3> start = std::nullopt);

  Phase phase() const { return phase_; }
  int delay_remaining() const { return delay_remaining_; }
  const Vec3& cursor() const { return cursor_; }
  const TissueEnv& env() const { return env_; }
  const DemoSet& completed() const { return completed_; }
  int completed_episodes() const { return completed_.episode_count(); }
  std::size_t pending_records() const { return current_.size(); }

 private:
  void begin_episode(const Vec3& start);

  SceneConfig scene_;
  TissueEnv env_;
  int reposition_delay_;
  Phase phase_ = Phase::kActive;
  int delay_remaining_ = 0;
  Vec3 cursor_;
  std::vector<DemoRecord> current_;
  DemoSet completed_;
};

}  // namespace lfd::demos
