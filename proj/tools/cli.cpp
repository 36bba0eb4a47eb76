#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "lfd/checkpoint.hpp"
#include "lfd/demos.hpp"
#include "lfd/errors.hpp"
#include "lfd/eval.hpp"
#include "lfd/run.hpp"
#include "lfd/serve.hpp"

namespace lfd::cli {
namespace {

namespace fs = std::filesystem;

// Options shared by every subcommand that needs a scene or run config.
struct ConfigFlags {
  std::string config_path;
  std::string seed;
  bool desk_scale = false;
  bool allow_mismatch = false;
  std::map<std::string, std::string> keys;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Flat key = value config file");
    app->add_option("--seed", seed, "Seed, or comma separated seed list for train");
    app->add_flag("--desk-scale", desk_scale, "Reduced profile: 2 mm steps, 300-step episodes");
    app->add_flag("--allow-fingerprint-mismatch", allow_mismatch, "Accept artefacts recorded under another scene");
    static const std::set<std::string> covered = {"seed", "seeds", "desk_scale", "allow_fingerprint_mismatch"};
    for (const auto& k : RunConfig::all_keys()) {
      if (covered.count(k)) continue;
      app->add_option("--" + k, keys[k], "config key " + k);
    }
  }

  // Config file entries overridden by explicit flags.
  KeyValueFile merged(const CLI::App* app) const {
    KeyValueFile kv;
    if (!config_path.empty()) kv = KeyValueFile::load(config_path);
    KeyValueFile over;
    if (!seed.empty()) over.set("seeds", seed);
    if (desk_scale) over.set("desk_scale", "true");
    if (allow_mismatch) over.set("allow_fingerprint_mismatch", "true");
    for (const auto& [k, v] : keys)
      if (app->count("--" + k) > 0) over.set(k, v);
    return merge(kv, over);
  }

  bool touches_scene(const CLI::App* app) const {
    if (!config_path.empty() || desk_scale) return true;
    for (const auto& k : SceneConfig::keys())
      if (app->count("--" + k) > 0) return true;
    return false;
  }
};

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << text;
  if (!f) throw IoError("write failed for " + p.string());
}

std::string read_text(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::pair<int, int> parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  try {
    if (x == std::string::npos) throw std::invalid_argument("no separator");
    std::size_t a = 0;
    std::size_t b = 0;
    const int nx = std::stoi(text.substr(0, x), &a);
    const int nz = std::stoi(text.substr(x + 1), &b);
    if (a != x || b != text.size() - x - 1) throw std::invalid_argument("trailing text");
    return {nx, nz};
  } catch (const std::exception&) {
    throw ConfigError("grid", "expected NxM, got `" + text + "`");
  }
}

void print_replay(const demos::ReplayReport& r, std::ostream& out) {
  out << "episodes " << r.episodes << "\n"
      << "steps " << r.steps << "\n"
      << "max_deviation " << format_double(r.max_deviation) << "\n";
  if (r.worst_episode >= 0) out << "worst episode " << r.worst_episode << " step " << r.worst_step << "\n";
  out << "done_mismatch " << (r.done_mismatch ? "true" : "false") << "\n"
      << (r.ok() ? "replay ok" : "replay DIVERGED") << "\n";
}

int replay_file(const std::string& path, const ConfigFlags& flags, const CLI::App* app, std::ostream& out) {
  SceneConfig scene = demos::header_scene(path);
  std::optional<std::string> expected;
  if (flags.touches_scene(app)) {
    scene = RunConfig::resolve(flags.merged(app)).scene;
    expected = scene.fingerprint();
  }
  const demos::DemoSet set = demos::load(path, expected, flags.allow_mismatch);
  TissueEnv env(scene);
  const auto report = demos::replay(set, env);
  print_replay(report, out);
  return report.ok() ? kOk : kContractViolation;
}

std::vector<eval::Curve> curves_of(const fs::path& run_dir, std::string* algorithm) {
  const auto cfg = KeyValueFile::load((run_dir / "config.kv").string());
  if (algorithm) *algorithm = cfg.has("algorithm") ? cfg.get("algorithm") : run_dir.filename().string();
  std::istringstream manifest(read_text(run_dir / "seeds.csv"));
  std::string line;
  std::getline(manifest, line);
  std::vector<eval::Curve> out;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string seed;
    std::string metrics;
    std::getline(row, seed, ',');
    std::getline(row, metrics, ',');
    out.push_back(eval::read_metrics_curve(read_text(run_dir / metrics)));
  }
  if (out.empty()) throw FormatError(run_dir.string() + "/seeds.csv lists no runs");
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learning-from-demonstration tissue retraction harness", "lfd"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train PPO or GAIL for every requested seed");
  ConfigFlags train_flags;
  train_flags.attach(train);
  std::string train_out;
  bool force = false;
  bool quiet = false;
  int progress_every = 10;
  train->add_option("--out", train_out, "Run directory (default runs/<algorithm>)");
  train->add_flag("--force", force, "Overwrite a non-empty run directory");
  train->add_flag("--quiet", quiet, "No progress lines");
  train->add_option("--progress-every", progress_every, "Print every n-th update")->check(CLI::PositiveNumber);

  // eval
  auto* ev = app.add_subcommand("eval", "Grid evaluation of a checkpoint");
  ConfigFlags eval_flags;
  eval_flags.attach(ev);
  std::string checkpoint_path;
  std::string grid_text = "7x7";
  bool deterministic = false;
  std::string eval_out = "eval";
  ev->add_option("--checkpoint", checkpoint_path, "checkpoint.json written by train")->required();
  ev->add_option("--grid", grid_text, "Grid size NxM over the sheet");
  ev->add_flag("--deterministic", deterministic, "Greedy actions instead of sampling");
  ev->add_option("--out", eval_out, "Directory for heatmap.csv and summary.json");

  // demos
  auto* dm = app.add_subcommand("demos", "Generate scripted demonstrations or replay a demo file");
  ConfigFlags demos_flags;
  demos_flags.attach(dm);
  std::string demos_mode;
  int count = 35;
  std::string demos_out = "demos.jsonl";
  std::string demos_in;
  dm->add_option("mode", demos_mode, "scripted | replay")->required()->check(CLI::IsMember({"scripted", "replay"}));
  dm->add_option("file", demos_in, "Demo file to replay");
  dm->add_option("--count", count, "Scripted episodes")->check(CLI::PositiveNumber);
  dm->add_option("--out", demos_out, "Output demo file (scripted)");

  // replay
  auto* rp = app.add_subcommand("replay", "Re-execute a demo file and report observation divergence");
  ConfigFlags replay_flags;
  replay_flags.attach(rp);
  std::string replay_in;
  rp->add_option("file", replay_in, "Demo file")->required();

  // serve
  auto* sv = app.add_subcommand("serve", "Teleoperation service: static client plus /ws JSON channel");
  ConfigFlags serve_flags;
  serve_flags.attach(sv);
  serve::ServerOptions server_options;
  sv->add_option("--port", server_options.port, "TCP port (0 picks a free one)");
  sv->add_option("--address", server_options.address, "Bind address");
  sv->add_option("--web-root", server_options.web_root, "Directory with the browser client");
  sv->add_option("--tick-hz", server_options.tick_hz, "Server tick rate");
  sv->add_option("--reposition-delay", server_options.session.reposition_delay, "Ticks between episodes");
  sv->add_option("--save", server_options.session.save_path, "Demo file written by control:save");

  // compare
  auto* cmp = app.add_subcommand("compare", "Sample-efficiency comparison of two run directories");
  std::string run_a;
  std::string run_b;
  double threshold = -0.2;
  std::string compare_out = "compare";
  cmp->add_option("run_a", run_a, "First run directory")->required();
  cmp->add_option("run_b", run_b, "Second run directory")->required();
  cmp->add_option("--threshold", threshold, "Normalized reward threshold");
  cmp->add_option("--out", compare_out, "Directory for comparison.csv and comparison.json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*train) {
      RunConfig cfg = RunConfig::resolve(train_flags.merged(train));
      if (train_out.empty()) train_out = "runs/" + cfg.algorithm;
      int updates = 0;
      const auto runs = train_runs(cfg, train_out, force, [&](std::uint64_t seed, const ppo::MetricsRow& row) {
        if (quiet || (updates++ % progress_every) != 0) return;
        out << "seed " << seed << " step " << row.global_step << " reward " << format_double(row.mean_episode_reward)
            << "\n"
            << std::flush;
      });
      for (const auto& r : runs) out << "seed " << r.seed << " done: " << r.metrics_path << "\n";
      out << "run directory " << train_out << "\n";
      return kOk;
    }
    if (*ev) {
      const auto [nx, nz] = parse_grid(grid_text);
      std::optional<SceneConfig> expected;
      if (eval_flags.touches_scene(ev)) expected = RunConfig::resolve(eval_flags.merged(ev)).scene;
      if (!fs::exists(checkpoint_path)) throw IoError("checkpoint " + checkpoint_path + " does not exist");
      const Checkpoint ck = load_checkpoint(checkpoint_path, expected, eval_flags.allow_mismatch);
      const SceneConfig& scene = expected.value_or(ck.scene);
      const eval::GridSpec grid = eval::GridSpec::over_sheet(scene, nx, nz);
      grid.validate(scene);
      std::uint64_t seed = 0;
      if (!eval_flags.seed.empty()) seed = parse_seed_list("seed", eval_flags.seed).front();
      const auto result = eval::run_grid(scene, grid, Policy(ck.policy), deterministic, seed);
      const fs::path dir(eval_out);
      write_text(dir / "heatmap.csv", eval::heatmap_csv(result));
      write_text(dir / "summary.json", eval::summary_json(result, scene.fingerprint()).dump(2) + "\n");
      out << "ATE " << format_double(result.ate) << "\n";
      return kOk;
    }
    if (*dm) {
      if (demos_mode == "replay") {
        if (demos_in.empty()) throw ConfigError("file", "demos replay needs a demo file");
        return replay_file(demos_in, demos_flags, dm, out);
      }
      const RunConfig cfg = RunConfig::resolve(demos_flags.merged(dm));
      const demos::DemoSet set = demos::scripted_demo_set(cfg.scene, count, cfg.seeds.front());
      demos::save(set, cfg.scene, demos_out);
      out << "wrote " << set.episode_count() << " episodes (" << set.records.size() << " steps) to " << demos_out
          << "\n";
      return kOk;
    }
    if (*rp) return replay_file(replay_in, replay_flags, rp, out);
    if (*sv) {
      const RunConfig cfg = RunConfig::resolve(serve_flags.merged(sv));
      serve::Server server(cfg.scene, server_options);
      out << "listening on http://" << server_options.address << ":" << server.port() << "/ (scene "
          << cfg.scene.fingerprint() << ")\n"
          << std::flush;
      server.run();
      return kOk;
    }
    if (*cmp) {
      std::string name_a;
      std::string name_b;
      const auto a = curves_of(run_a, &name_a);
      const auto b = curves_of(run_b, &name_b);
      if (name_a == name_b) {
        name_a += "_a";
        name_b += "_b";
      }
      const auto c = eval::compare_curves(a, b, threshold);
      const fs::path dir(compare_out);
      write_text(dir / "comparison.csv", eval::comparison_csv(c, name_a, name_b));
      write_text(dir / "comparison.json", eval::comparison_json(c, name_a, name_b).dump(2) + "\n");
      const auto show = [](const std::optional<std::int64_t>& s) { return s ? std::to_string(*s) : "never"; };
      out << name_a << " reaches " << format_double(threshold) << " at " << show(c.a.crossing) << "\n"
          << name_b << " reaches " << format_double(threshold) << " at " << show(c.b.crossing) << "\n";
      return kOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const FingerprintMismatch& e) {
    err << "fingerprint mismatch: " << e.what() << "\n";
    return kFingerprintMismatch;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return kIoError;
  } catch (const ContractViolation& e) {
    err << "contract violation: " << e.what() << "\n";
    return kContractViolation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace lfd::cli
