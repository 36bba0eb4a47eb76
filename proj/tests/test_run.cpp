#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lfd/checkpoint.hpp"
#include "lfd/errors.hpp"
#include "lfd/run.hpp"

using namespace lfd;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lfd_run_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string read_all(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

KeyValueFile small_run(const std::string& extra = "") {
  return KeyValueFile::parse(
      "desk_scale = true\n"
      "total_steps = 512\n"
      "horizon = 256\n"
      "minibatch_size = 64\n"
      "epochs = 1\n"
      "hidden = 16, 16\n"
      "disc_hidden = 16\n" +
      extra);
}

}  // namespace

TEST_CASE("checkpoint json round trip and fingerprint gate") {
  Checkpoint c;
  c.algorithm = "gail";
  c.global_step = 1234;
  c.seed = 7;
  c.scene = SceneConfig::desk_scale();
  c.policy = Policy::create({8}, 1).net();
  c.value = make_value_net({8}, 2);
  c.discriminator = gail::Discriminator::create({8}, 3).net();
  CHECK(checkpoint_from_string(checkpoint_to_string(c)) == c);

  const fs::path dir = fresh_dir("ckpt");
  fs::create_directories(dir);
  const std::string path = (dir / "c.json").string();
  save_checkpoint(c, path);
  CHECK(load_checkpoint(path) == c);
  CHECK_THROWS_AS(load_checkpoint(path, SceneConfig::full_scale()), FingerprintMismatch);
  CHECK_NOTHROW(load_checkpoint(path, SceneConfig::full_scale(), true));
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.json").string()), IoError);
  CHECK_THROWS_AS(checkpoint_from_string("{\"version\": 1}"), FormatError);
  CHECK_THROWS_AS(checkpoint_from_string("not json"), FormatError);
}

TEST_CASE("run config resolution") {
  const RunConfig c = RunConfig::resolve(small_run("seeds = 3, 1, 2\n"));
  CHECK(c.desk_scale);
  CHECK(c.scene == SceneConfig::desk_scale());
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 1, 2});
  CHECK(c.ppo.total_steps == 512);
  CHECK(c.gail.disc_hidden == std::vector<int>{16});

  auto expect_field = [](const std::string& text, const std::string& field) {
    try {
      RunConfig::resolve(KeyValueFile::parse(text));
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == field);
    }
  };
  expect_field("algorithm = gail\n", "demos");
  expect_field("algorithm = sac\n", "algorithm");
  expect_field("step_sise = 2\n", "step_sise");
  expect_field("seeds = 1, 1\n", "seeds");
  expect_field("clip_epsilon = 3\n", "clip_epsilon");
  expect_field("step_size = -1\n", "step_size");
  expect_field("desk_scale = maybe\n", "desk_scale");
}

TEST_CASE("frozen config materializes every key and resolves to the same run") {
  const RunConfig c = RunConfig::resolve(small_run("seed = 4\nalgorithm = gail\ndemos = d.jsonl\n"));
  const KeyValueFile frozen = c.to_kv();
  for (const auto& k : RunConfig::all_keys())
    if (k != "seed") CHECK_MESSAGE(frozen.has(k), k);
  const RunConfig back = RunConfig::resolve(KeyValueFile::parse(frozen.to_string()));
  CHECK(back.to_kv().to_string() == frozen.to_string());
  CHECK(back.seeds == std::vector<std::uint64_t>{4});
  CHECK(back.demos_path == c.demos_path);
  CHECK(merge(KeyValueFile::parse("a = 1\nb = 2\n"), KeyValueFile::parse("b = 3\n")).get("b") == "3");
}

TEST_CASE("train_runs writes per-seed outputs and a manifest") {
  const fs::path dir = fresh_dir("train");
  const RunConfig c = RunConfig::resolve(small_run("seeds = 1, 2, 3\n"));
  const auto runs = train_runs(c, dir.string(), false);
  REQUIRE(runs.size() == 3);
  CHECK(fs::exists(dir / "config.kv"));
  const std::string manifest = read_all(dir / "seeds.csv");
  CHECK(manifest.rfind("seed,metrics,checkpoint,steps\n", 0) == 0);
  for (const auto& r : runs) {
    CHECK(fs::exists(r.metrics_path));
    CHECK(fs::exists(r.checkpoint_path));
    CHECK(r.steps == 512);
    CHECK(load_checkpoint(r.checkpoint_path, c.scene).seed == r.seed);
    CHECK(manifest.find(std::to_string(r.seed) + ",seed_" + std::to_string(r.seed) + "/metrics.csv") !=
          std::string::npos);
  }
  CHECK_THROWS_AS(train_runs(c, dir.string(), false), IoError);

  // Re-running from the frozen config reproduces the run.
  const fs::path again = fresh_dir("train_again");
  train_runs(RunConfig::resolve(KeyValueFile::load((dir / "config.kv").string())), again.string(), false);
  for (const int s : {1, 2, 3}) {
    const std::string sub = "seed_" + std::to_string(s);
    CHECK(read_all(dir / sub / "metrics.csv") == read_all(again / sub / "metrics.csv"));
    CHECK(read_all(dir / sub / "checkpoint.json") == read_all(again / sub / "checkpoint.json"));
  }
  fs::remove_all(dir);
  fs::remove_all(again);
}

TEST_CASE("gail training refuses demos from another scene") {
  const fs::path dir = fresh_dir("gail_fp");
  fs::create_directories(dir);
  const std::string demo_path = (dir / "full.jsonl").string();
  const auto full = SceneConfig::full_scale();
  demos::save(demos::scripted_demo_set(full, 1, 1), full, demo_path);
  const RunConfig c = RunConfig::resolve(small_run("algorithm = gail\ndemos = " + demo_path + "\n"));
  CHECK_THROWS_AS(train_runs(c, (dir / "out").string(), false), FingerprintMismatch);
  RunConfig allowed = c;
  allowed.allow_fingerprint_mismatch = true;
  CHECK(train_runs(allowed, (dir / "out2").string(), false).size() == 1);
  fs::remove_all(dir);
}
