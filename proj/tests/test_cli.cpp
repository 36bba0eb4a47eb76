#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"
#include "lfd/scene.hpp"

namespace fs = std::filesystem;
using lfd::cli::run;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result lfd_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string read_all(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

int count_lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

const std::vector<std::string> kTiny = {"--desk-scale",        "--total_steps", "512", "--horizon", "256",
                                        "--minibatch_size",    "64",            "--epochs", "1", "--hidden",
                                        "16,16",               "--disc_hidden", "16"};

std::vector<std::string> with(std::vector<std::string> head, const std::vector<std::string>& tail) {
  head.insert(head.end(), tail.begin(), tail.end());
  return head;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("lfd_cli_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with the config code") {
  CHECK(lfd_cli({}).code == lfd::cli::kConfigError);
  CHECK(lfd_cli({"frobnicate"}).code == lfd::cli::kConfigError);
  CHECK(lfd_cli({"train", "--no-such-flag"}).code == lfd::cli::kConfigError);
  CHECK(lfd_cli({"eval"}).code == lfd::cli::kConfigError);
  CHECK(lfd_cli({"demos", "teleport"}).code == lfd::cli::kConfigError);
  CHECK(lfd_cli({"--help"}).code == lfd::cli::kOk);
  const auto r = lfd_cli({"train", "--algorithm", "gail"});
  CHECK(r.code == lfd::cli::kConfigError);
  CHECK(r.err.find("demos") != std::string::npos);
  CHECK(lfd_cli({"train", "--step_size", "-3"}).code == lfd::cli::kConfigError);
}

TEST_CASE("config files and flags") {
  TempDir d("config");
  std::ofstream(d / "bad.kv") << "this line has no equals sign\n";
  CHECK(lfd_cli({"train", "--config", d / "bad.kv"}).code == lfd::cli::kIoError);
  CHECK(lfd_cli({"train", "--config", d / "missing.kv"}).code == lfd::cli::kIoError);

  std::ofstream(d / "run.kv") << "total_steps = 256\nhorizon = 256\nminibatch_size = 64\nepochs = 1\nhidden = 8\n";
  const auto r = lfd_cli({"train", "--config", d / "run.kv", "--desk-scale", "--seed", "2,3", "--quiet", "--out",
                          d / "runs"});
  REQUIRE(r.code == lfd::cli::kOk);
  const std::string frozen = read_all(d.path / "runs" / "config.kv");
  CHECK(frozen.find("total_steps = 256") != std::string::npos);
  CHECK(frozen.find("seeds = 2, 3") != std::string::npos);
  CHECK(frozen.find("desk_scale = true") != std::string::npos);
  CHECK(fs::exists(d.path / "runs" / "seed_3" / "checkpoint.json"));
}

TEST_CASE("train, eval and compare") {
  TempDir d("pipeline");
  auto r = lfd_cli(with({"train", "--out", d / "ppo", "--progress-every", "1"}, kTiny));
  REQUIRE(r.code == lfd::cli::kOk);
  CHECK(r.out.find("seed 1 step 256 reward") != std::string::npos);
  CHECK(lfd_cli(with({"train", "--quiet", "--out", d / "ppo"}, kTiny)).code == lfd::cli::kIoError);
  CHECK(lfd_cli(with({"train", "--quiet", "--force", "--out", d / "ppo"}, kTiny)).code == lfd::cli::kOk);

  const std::string ckpt = d / "ppo/seed_1/checkpoint.json";
  r = lfd_cli({"eval", "--checkpoint", ckpt, "--grid", "3x3", "--deterministic", "--out", d / "e1"});
  REQUIRE(r.code == lfd::cli::kOk);
  CHECK(r.out.rfind("ATE ", 0) == 0);
  const std::string heat = read_all(d.path / "e1" / "heatmap.csv");
  CHECK(count_lines(heat) == 10);
  const auto summary = nlohmann::json::parse(read_all(d.path / "e1" / "summary.json"));
  CHECK(summary["n_trials"] == 9);
  CHECK(summary["config_fingerprint"] == lfd::SceneConfig::desk_scale().fingerprint());

  REQUIRE(lfd_cli({"eval", "--checkpoint", ckpt, "--grid", "3x3", "--deterministic", "--out", d / "e2"}).code == 0);
  CHECK(read_all(d.path / "e2" / "heatmap.csv") == heat);
  CHECK(read_all(d.path / "e2" / "summary.json") == read_all(d.path / "e1" / "summary.json"));

  REQUIRE(lfd_cli({"eval", "--checkpoint", ckpt, "--out", d / "e3"}).code == 0);
  CHECK(count_lines(read_all(d.path / "e3" / "heatmap.csv")) == 50);

  CHECK(lfd_cli({"eval", "--checkpoint", d / "none.json"}).code == lfd::cli::kIoError);
  CHECK(lfd_cli({"eval", "--checkpoint", ckpt, "--grid", "3by3"}).code == lfd::cli::kConfigError);
  CHECK(lfd_cli({"eval", "--checkpoint", ckpt, "--grid", "0x3"}).code == lfd::cli::kConfigError);
  CHECK(lfd_cli({"eval", "--checkpoint", ckpt, "--step_size", "3", "--out", d / "e4"}).code ==
        lfd::cli::kFingerprintMismatch);
  CHECK(lfd_cli({"eval", "--checkpoint", ckpt, "--step_size", "3", "--allow-fingerprint-mismatch", "--grid", "1x1",
                 "--out", d / "e5"})
            .code == lfd::cli::kOk);
  std::ofstream(d / "broken.json") << "{";
  CHECK(lfd_cli({"eval", "--checkpoint", d / "broken.json"}).code == lfd::cli::kIoError);

  REQUIRE(lfd_cli(with({"train", "--quiet", "--seed", "2", "--out", d / "ppo2"}, kTiny)).code == 0);
  r = lfd_cli({"compare", d / "ppo", d / "ppo2", "--threshold", "-0.9", "--out", d / "cmp"});
  REQUIRE(r.code == lfd::cli::kOk);
  CHECK(r.out.find("ppo_a reaches") != std::string::npos);
  const auto cmp = nlohmann::json::parse(read_all(d.path / "cmp" / "comparison.json"));
  CHECK(cmp.contains("ppo_a_crossing_step"));
  CHECK(cmp.contains("ppo_b_crossing_step"));
  CHECK(lfd_cli({"compare", d / "ppo", d / "nowhere"}).code == lfd::cli::kIoError);
}

TEST_CASE("demos and replay") {
  TempDir d("demos");
  auto r = lfd_cli({"demos", "scripted", "--desk-scale", "--out", d / "all.jsonl"});
  REQUIRE(r.code == lfd::cli::kOk);
  CHECK(r.out.find("wrote 35 episodes") != std::string::npos);

  r = lfd_cli({"demos", "scripted", "--desk-scale", "--count", "1", "--seed", "9", "--out", d / "one.jsonl"});
  REQUIRE(r.code == lfd::cli::kOk);
  CHECK(r.out.find("wrote 1 episodes") != std::string::npos);
  CHECK(lfd_cli({"demos", "scripted", "--desk-scale", "--count", "0"}).code == lfd::cli::kConfigError);

  CHECK(lfd_cli({"replay", d / "one.jsonl"}).code == lfd::cli::kOk);
  CHECK(lfd_cli({"demos", "replay", d / "all.jsonl"}).code == lfd::cli::kOk);
  CHECK(lfd_cli({"demos", "replay"}).code == lfd::cli::kConfigError);
  CHECK(lfd_cli({"replay", d / "missing.jsonl"}).code == lfd::cli::kIoError);

  // Tampered observation diverges on replay.
  std::istringstream lines(read_all(d.path / "one.jsonl"));
  std::string line, text;
  for (int n = 0; std::getline(lines, line); ++n) {
    if (n == 3) {
      auto j = nlohmann::json::parse(line);
      j["observation"][0] = j["observation"][0].get<double>() + 1.0;
      line = j.dump();
    }
    text += line + "\n";
  }
  std::ofstream(d / "tampered.jsonl") << text;
  CHECK(lfd_cli({"replay", d / "tampered.jsonl"}).code == lfd::cli::kContractViolation);

  std::ofstream(d / "corrupt.jsonl") << read_all(d.path / "one.jsonl").substr(0, 200);
  CHECK(lfd_cli({"replay", d / "corrupt.jsonl"}).code == lfd::cli::kIoError);

  // Demos recorded under the desk profile do not match the full-scale scene.
  CHECK(lfd_cli({"train", "--algorithm", "gail", "--demos", d / "one.jsonl", "--out", d / "g"}).code ==
        lfd::cli::kFingerprintMismatch);
  r = lfd_cli(with({"train", "--quiet", "--algorithm", "gail", "--demos", d / "one.jsonl", "--out", d / "g2"}, kTiny));
  CHECK(r.code == lfd::cli::kOk);
}

TEST_CASE("serve rejects bad options before listening") {
  CHECK(lfd_cli({"serve", "--web-root", "/no/such/dir", "--port", "0"}).code == lfd::cli::kIoError);
  CHECK(lfd_cli({"serve", "--tick-hz", "0", "--port", "0"}).code == lfd::cli::kConfigError);
}
