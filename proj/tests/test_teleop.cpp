#include <filesystem>

#include "doctest.h"
#include "lfd/errors.hpp"
#include "lfd/teleop.hpp"

using namespace lfd;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json only(const std::vector<std::string>& frames) {
  REQUIRE(frames.size() == 1);
  return json::parse(frames[0]);
}

std::string error_code(const std::vector<std::string>& frames) {
  const json j = only(frames);
  REQUIRE(j["type"] == "error");
  CHECK(j["message"].is_string());
  return j["code"];
}

std::string action_frame(const Action& a) {
  return json{{"type", "action"}, {"beta", a.beta}}.dump();
}

// Drives one full expert episode through the session; returns the final state frame.
json run_expert_episode(teleop::Session& s) {
  const SceneConfig& scene = s.scene();
  const Vec3 wp = demos::grasp_waypoint(scene, make_sheet(scene));
  for (int guard = 0; guard < 10000; ++guard) {
    const auto& env = s.recording().env();
    const Action a = demos::expert_action(env.state(), scene, wp);
    CHECK(s.handle(action_frame(a)).empty());
    const auto frame = s.tick();
    REQUIRE(frame);
    json j = json::parse(*frame);
    if (j.value("episode_finished", false)) return j;
  }
  FAIL("episode never finished");
  return {};
}

}  // namespace

TEST_CASE("hello handshake and version check") {
  teleop::Session s(SceneConfig::desk_scale());
  const json h = only(s.handle(R"({"type":"hello","version":1})"));
  CHECK(h["type"] == "hello");
  CHECK(h["version"] == teleop::kProtocolVersion);
  CHECK(h["fingerprint"] == SceneConfig::desk_scale().fingerprint());
  CHECK(h["reposition_delay"] == 20);
  CHECK(h["scene"].is_object());
  CHECK(error_code(s.handle(R"({"type":"hello","version":2})")) == "version");
  CHECK(error_code(s.handle(R"({"type":"hello"})")) == "malformed");
}

TEST_CASE("malformed and misdirected frames") {
  teleop::Session s(SceneConfig::desk_scale());
  CHECK(error_code(s.handle("{not json")) == "malformed");
  CHECK(error_code(s.handle("[1,2]")) == "malformed");
  CHECK(error_code(s.handle(R"({"type":5})")) == "malformed");
  CHECK(error_code(s.handle(R"({"type":"teleport"})")) == "unknown_type");
  for (const char* t : {"state", "saved", "error"})
    CHECK(error_code(s.handle(json{{"type", t}}.dump())) == "direction");
  CHECK(error_code(s.handle(R"({"type":"control"})")) == "malformed");
  CHECK(error_code(s.handle(R"({"type":"control","command":"fly"})")) == "unknown_command");
  CHECK(error_code(s.handle(R"({"type":"action","beta":[1,0]})")) == "malformed");
  CHECK(error_code(s.handle(R"({"type":"action"})")) == "malformed");
}

TEST_CASE("actions are validated before the session starts") {
  teleop::Session s(SceneConfig::desk_scale());
  CHECK(error_code(s.handle(R"({"type":"action","beta":[1,0,0]})")) == "not_started");
  CHECK_FALSE(s.has_pending_action());
  CHECK_FALSE(s.tick());

  const json st = only(s.handle(R"({"type":"control","command":"start"})"));
  CHECK(st["type"] == "state");
  CHECK(st["phase"] == "active");
  CHECK(st["t"] == 0);
  const Vec3 start = teleop::default_start(s.scene());
  CHECK(st["ee"] == json::array({start.x, start.y, start.z}));

  const auto before = s.recording().env().state().ee_position;
  for (const char* bad : {R"([2,0,0])", R"([0,-2,0])", R"([0.5,0,0])", R"(["a",0,0])"}) {
    CHECK(error_code(s.handle(std::string(R"({"type":"action","beta":)") + bad + "}")) == "range");
    CHECK_FALSE(s.has_pending_action());
  }
  CHECK(s.recording().env().state().ee_position == before);
  CHECK_FALSE(s.tick());
}

TEST_CASE("latest action wins and idle ticks send nothing") {
  teleop::Session s(SceneConfig::desk_scale());
  s.handle(R"({"type":"control","command":"start"})");
  CHECK(s.handle(R"({"type":"action","beta":[1,0,0]})").empty());
  CHECK(s.handle(R"({"type":"action","beta":[0,0,-1]})").empty());
  CHECK(s.has_pending_action());
  const Vec3 p0 = s.recording().env().state().ee_position;
  const json st = json::parse(*s.tick());
  CHECK(st["t"] == 1);
  const Vec3 p1 = s.recording().env().state().ee_position;
  CHECK(p1.x == p0.x);
  CHECK(p1.z == doctest::Approx(p0.z - s.scene().step_size));
  CHECK(st["ee"] == json::array({p1.x, p1.y, p1.z}));
  CHECK_FALSE(s.tick());
  CHECK(st["grid"]["points"].size() == st["grid"]["nx"].get<int>() * st["grid"]["nz"].get<int>());
  CHECK(st["gripper"] == 0);
}

TEST_CASE("start positions are validated") {
  teleop::Session s(SceneConfig::desk_scale());
  CHECK(error_code(s.handle(R"({"type":"control","command":"set_start","start":[0,-5,0]})")) == "range");
  CHECK(error_code(s.handle(R"({"type":"control","command":"set_start","start":[0,1]})")) == "malformed");
  CHECK(error_code(s.handle(R"({"type":"control","command":"set_start"})")) == "malformed");
  CHECK(s.handle(R"({"type":"control","command":"set_start","start":[10,20,10]})").empty());
  const json st = only(s.handle(R"({"type":"control","command":"start"})"));
  CHECK(st["ee"] == json::array({10.0, 20.0, 10.0}));
  const json st2 = only(s.handle(R"({"type":"control","command":"start","start":[-10,30,5]})"));
  CHECK(st2["ee"] == json::array({-10.0, 30.0, 5.0}));
}

TEST_CASE("reset drops the episode in progress") {
  teleop::Session s(SceneConfig::desk_scale());
  s.handle(R"({"type":"control","command":"start"})");
  for (int i = 0; i < 3; ++i) {
    s.handle(R"({"type":"action","beta":[1,0,0]})");
    s.tick();
  }
  CHECK(s.recording().pending_records() == 3);
  const json st = only(s.handle(R"({"type":"control","command":"reset"})"));
  CHECK(st["t"] == 0);
  CHECK(st["episode_reward"] == 0.0);
  CHECK(s.recording().pending_records() == 0);
  CHECK(s.recording().completed_episodes() == 0);
  CHECK(error_code(s.handle(R"({"type":"control","command":"save"})")) == "empty");
}

TEST_CASE("recorded episodes save, load and replay") {
  const fs::path dir = fs::temp_directory_path() / "lfd_teleop_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  teleop::SessionOptions opts;
  opts.save_path = (dir / "demos.jsonl").string();
  opts.reposition_delay = 3;
  teleop::Session s(SceneConfig::desk_scale(), opts);
  s.handle(R"({"type":"control","command":"start"})");

  const json fin = run_expert_episode(s);
  CHECK(fin["done_reason"] == "target_reached");
  CHECK(fin["phase"] == "repositioning");
  CHECK(fin["episodes"] == 1);
  CHECK(fin["delay_remaining"] == 3);

  // Cursor moves during the delay, then the next episode begins there.
  const Vec3 cursor0 = s.recording().cursor();
  for (int i = 0; i < 3; ++i) {
    s.handle(R"({"type":"action","beta":[1,0,0]})");
    s.tick();
  }
  CHECK(s.recording().phase() == demos::RecordingSession::Phase::kActive);
  CHECK(s.recording().env().state().ee_position.x == doctest::Approx(cursor0.x + 3 * s.scene().step_size));

  const json saved = only(s.handle(R"({"type":"control","command":"save"})"));
  CHECK(saved["type"] == "saved");
  CHECK(saved["count"] == 1);
  CHECK(saved["path"] == opts.save_path);

  const auto set = demos::load(opts.save_path, s.scene().fingerprint());
  CHECK(set.episode_count() == 1);
  TissueEnv env(s.scene());
  CHECK(demos::replay(set, env).ok());

  teleop::SessionOptions bad = opts;
  bad.save_path = (dir / "missing" / "x.jsonl").string();
  teleop::Session s2(SceneConfig::desk_scale(), bad);
  s2.handle(R"({"type":"control","command":"start"})");
  run_expert_episode(s2);
  CHECK(error_code(s2.handle(R"({"type":"control","command":"save"})")) == "io");
  fs::remove_all(dir);
}

TEST_CASE("identical frame transcripts produce identical outputs") {
  auto transcript = [] {
    teleop::Session s(SceneConfig::desk_scale());
    std::vector<std::string> out;
    auto push = [&](const std::vector<std::string>& v) { out.insert(out.end(), v.begin(), v.end()); };
    push(s.handle(R"({"type":"hello","version":1})"));
    push(s.handle(R"({"type":"control","command":"start"})"));
    const int pattern[][3] = {{1, 0, 0}, {0, -1, 0}, {0, -1, 1}, {-1, -1, 0}, {0, 0, 0}};
    for (int k = 0; k < 40; ++k) {
      const auto& p = pattern[k % 5];
      push(s.handle(json{{"type", "action"}, {"beta", {p[0], p[1], p[2]}}}.dump()));
      if (auto f = s.tick()) out.push_back(*f);
    }
    return out;
  };
  CHECK(transcript() == transcript());
}

TEST_CASE("outgoing frames are single-line JSON") {
  teleop::Session s(SceneConfig::desk_scale());
  for (const auto& f : s.handle(R"({"type":"control","command":"start"})")) CHECK(f.find('\n') == std::string::npos);
  CHECK(teleop::Session::error_frame("x", "multi\nline").find('\n') == std::string::npos);
}
