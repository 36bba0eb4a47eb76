#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "lfd/errors.hpp"
#include "lfd/kv_file.hpp"
#include "lfd/scene.hpp"

using namespace lfd;

TEST_CASE("key-value parsing keeps order and strips comments") {
  const auto kv = KeyValueFile::parse("# header\nb = 2  # trailing\n\na=hello world\n");
  REQUIRE(kv.entries().size() == 2);
  CHECK(kv.entries()[0].first == "b");
  CHECK(kv.get("b") == "2");
  CHECK(kv.get("a") == "hello world");
  CHECK(KeyValueFile::parse(kv.to_string()).entries() == kv.entries());
}

TEST_CASE("key-value parsing rejects malformed lines and duplicates") {
  CHECK_THROWS_AS(KeyValueFile::parse("novalue\n"), FormatError);
  CHECK_THROWS_AS(KeyValueFile::parse(" = 3\n"), FormatError);
  CHECK_THROWS_AS(KeyValueFile::parse("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(KeyValueFile::load("/nonexistent/dir/file.kv"), IoError);
}

TEST_CASE("typed value parsing names the key") {
  CHECK(parse_double("x", "2.5") == 2.5);
  CHECK(parse_int("n", "-7") == -7);
  CHECK(parse_bool("b", "true"));
  CHECK_FALSE(parse_bool("b", "0"));
  CHECK(parse_doubles("v", "1, 2 3") == std::vector<double>{1, 2, 3});
  try {
    parse_double("step_size", "fast");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "step_size");
  }
  CHECK_THROWS_AS(parse_int("n", "1.5"), ConfigError);
}

TEST_CASE("format_double round-trips exactly") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 2000; ++i) {
    const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
    CHECK(parse_double("v", format_double(v)) == v);
  }
  CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("fnv1a64 known vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("scene config round-trips through key-value text") {
  SceneConfig s = SceneConfig::desk_scale();
  s.tumour_radius = 4.25;
  s.attachment_edge = AttachmentEdge::kZMax;
  const auto back = SceneConfig::from_kv(KeyValueFile::parse(s.to_kv().to_string()));
  CHECK(back == s);
  CHECK(back.fingerprint() == s.fingerprint());
}

TEST_CASE("scene fingerprint changes with any field") {
  const SceneConfig base;
  SceneConfig other = base;
  other.step_size = 0.25;
  CHECK(base.fingerprint() != other.fingerprint());
  CHECK(base.fingerprint() != SceneConfig::desk_scale().fingerprint());
  CHECK(base.fingerprint().size() == 16);
}

TEST_CASE("desk and full-scale profiles") {
  const auto desk = SceneConfig::desk_scale();
  CHECK(desk.step_size == 2.0);
  CHECK(desk.max_episode_steps == 300);
  const auto full = SceneConfig::full_scale();
  CHECK(full.step_size == 0.5);
  CHECK(full.max_episode_steps == 2500);
  CHECK_NOTHROW(desk.validate());
  CHECK_NOTHROW(full.validate());
}

TEST_CASE("scene validation names the offending field") {
  auto expect_field = [](SceneConfig s, const std::string& field) {
    try {
      s.validate();
      FAIL("expected ConfigError for " << field);
    } catch (const ConfigError& e) {
      CHECK(e.field() == field);
    }
  };
  SceneConfig s;
  s.step_size = 0;
  expect_field(s, "step_size");
  s = {};
  s.sheet_nx = 1;
  expect_field(s, "sheet_grid");
  s = {};
  s.target_position = {0, 500, 0};
  expect_field(s, "target_position");
  s = {};
  s.tumour_radius = std::numeric_limits<double>::quiet_NaN();
  expect_field(s, "tumour_radius");
  s = {};
  s.workspace_box.lo.x = 60;
  expect_field(s, "workspace_box");
  CHECK_THROWS_AS(SceneConfig::from_kv(KeyValueFile::parse("tumour_center = 1, 2\n")), ConfigError);
  CHECK_THROWS_AS(SceneConfig::from_kv(KeyValueFile::parse("attachment_edge = top\n")), ConfigError);
}
