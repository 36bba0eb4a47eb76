#include "lfd/run.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "lfd/errors.hpp"

namespace lfd {
namespace fs = std::filesystem;

const std::vector<std::string>& RunConfig::run_keys() {
  static const std::vector<std::string> k = {"algorithm", "demos", "seeds", "desk_scale",
                                             "allow_fingerprint_mismatch"};
  return k;
}

std::vector<std::string> RunConfig::all_keys() {
  std::vector<std::string> out = run_keys();
  for (const auto* ks : {&SceneConfig::keys(), &ppo::PpoConfig::keys(), &gail::GailConfig::keys()})
    out.insert(out.end(), ks->begin(), ks->end());
  return out;
}

KeyValueFile merge(const KeyValueFile& base, const KeyValueFile& overrides) {
  KeyValueFile out = base;
  for (const auto& [k, v] : overrides.entries()) out.set(k, v);
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& text) {
  std::vector<std::uint64_t> out;
  for (const double d : parse_doubles(key, text)) {
    if (d < 0 || d != std::floor(d)) throw ConfigError(key, "seeds must be non-negative integers");
    out.push_back(static_cast<std::uint64_t>(d));
  }
  if (out.empty()) throw ConfigError(key, "at least one seed is required");
  std::set<std::uint64_t> uniq(out.begin(), out.end());
  if (uniq.size() != out.size()) throw ConfigError(key, "seeds must be distinct");
  return out;
}

RunConfig RunConfig::resolve(const KeyValueFile& kv) {
  const auto unknown = kv.unknown_keys(all_keys());
  if (!unknown.empty()) throw ConfigError(unknown.front(), "unknown configuration key");
  RunConfig c;
  if (kv.has("algorithm")) c.algorithm = kv.get("algorithm");
  if (kv.has("demos") && !kv.get("demos").empty()) c.demos_path = kv.get("demos");
  if (kv.has("desk_scale")) c.desk_scale = parse_bool("desk_scale", kv.get("desk_scale"));
  if (kv.has("allow_fingerprint_mismatch"))
    c.allow_fingerprint_mismatch = parse_bool("allow_fingerprint_mismatch", kv.get("allow_fingerprint_mismatch"));
  if (kv.has("seeds")) c.seeds = parse_seed_list("seeds", kv.get("seeds"));
  if (kv.has("seed")) c.seeds = parse_seed_list("seed", kv.get("seed"));
  c.scene = SceneConfig::from_kv(kv, c.desk_scale ? SceneConfig::desk_scale() : SceneConfig::full_scale());
  c.ppo = ppo::PpoConfig::from_kv(kv);
  c.ppo.seed = c.seeds.front();
  c.gail = gail::GailConfig::from_kv(kv);
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (algorithm != "ppo" && algorithm != "gail") throw ConfigError("algorithm", "must be `ppo` or `gail`");
  if (algorithm == "gail" && !demos_path) throw ConfigError("demos", "algorithm gail requires a demo file");
  if (seeds.empty()) throw ConfigError("seeds", "at least one seed is required");
  scene.validate();
  ppo.validate();
  gail.validate();
}

KeyValueFile RunConfig::to_kv() const {
  KeyValueFile kv;
  kv.set("algorithm", algorithm);
  kv.set("demos", demos_path.value_or(""));
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i) s += (i ? ", " : "") + std::to_string(seeds[i]);
  kv.set("seeds", s);
  kv.set("desk_scale", desk_scale ? "true" : "false");
  kv.set("allow_fingerprint_mismatch", allow_fingerprint_mismatch ? "true" : "false");
  const KeyValueFile scene_kv = scene.to_kv();
  for (const auto& [k, v] : scene_kv.entries()) kv.set(k, v);
  KeyValueFile p;
  ppo.write_kv(p);
  for (const auto& [k, v] : p.entries())
    if (k != "seed") kv.set(k, v);
  KeyValueFile g;
  gail.write_kv(g);
  for (const auto& [k, v] : g.entries()) kv.set(k, v);
  return kv;
}

std::string metrics_csv(const std::vector<ppo::MetricsRow>& rows) {
  std::string out = ppo::metrics_csv_header() + "\n";
  for (const auto& r : rows) out += ppo::metrics_csv_line(r) + "\n";
  return out;
}

TrainedModel train_seed(const RunConfig& cfg, std::uint64_t seed, const demos::DemoSet* demos,
                        const ProgressFn& progress) {
  ppo::PpoConfig pc = cfg.ppo;
  pc.seed = seed;
  ppo::PpoTrainer trainer(cfg.scene, pc);
  std::optional<gail::GailLearner> learner;
  ppo::RewardHook hook;
  if (cfg.algorithm == "gail") {
    if (!demos) throw ContractViolation("train_seed: gail needs demonstrations");
    learner.emplace(cfg.gail, *demos, seed);
    hook = learner->hook(pc.minibatch_size);
  }
  TrainedModel out;
  ppo::train(trainer, hook, [&](const ppo::MetricsRow& row) {
    out.rows.push_back(row);
    if (progress) progress(seed, row);
  });
  out.checkpoint.algorithm = cfg.algorithm;
  out.checkpoint.global_step = trainer.global_step();
  out.checkpoint.seed = seed;
  out.checkpoint.scene = cfg.scene;
  out.checkpoint.policy = trainer.policy().net();
  out.checkpoint.value = trainer.value_net();
  if (learner) out.checkpoint.discriminator = learner->discriminator().net();
  return out;
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << text;
  if (!f) throw IoError("write failed for " + p.string());
}

}  // namespace

std::vector<SeedRun> train_runs(const RunConfig& cfg, const std::string& out_dir, bool overwrite,
                                const ProgressFn& progress) {
  cfg.validate();
  const fs::path out(out_dir);
  std::error_code ec;
  if (fs::exists(out, ec) && !fs::is_empty(out, ec) && !overwrite)
    throw IoError("output directory " + out_dir + " is not empty (use --force to overwrite)");
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

  std::optional<demos::DemoSet> demo_set;
  if (cfg.algorithm == "gail")
    demo_set = demos::load(*cfg.demos_path, cfg.scene.fingerprint(), cfg.allow_fingerprint_mismatch);

  write_text(out / "config.kv", cfg.to_kv().to_string());
  std::vector<SeedRun> runs;
  std::string manifest = "seed,metrics,checkpoint,steps\n";
  for (const auto seed : cfg.seeds) {
    const fs::path dir = out / ("seed_" + std::to_string(seed));
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    TrainedModel m = train_seed(cfg, seed, demo_set ? &*demo_set : nullptr, progress);
    SeedRun r;
    r.seed = seed;
    r.metrics_path = (dir / "metrics.csv").string();
    r.checkpoint_path = (dir / "checkpoint.json").string();
    r.steps = m.checkpoint.global_step;
    write_text(r.metrics_path, metrics_csv(m.rows));
    save_checkpoint(m.checkpoint, r.checkpoint_path);
    manifest += std::to_string(seed) + ",seed_" + std::to_string(seed) + "/metrics.csv,seed_" + std::to_string(seed) +
                "/checkpoint.json," + std::to_string(r.steps) + "\n";
    runs.push_back(r);
  }
  write_text(out / "seeds.csv", manifest);
  return runs;
}

}  // namespace lfd
