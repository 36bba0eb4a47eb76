#include <cmath>
#include <random>

#include "doctest.h"
#include "lfd/env.hpp"
#include "lfd/errors.hpp"
#include "lfd/exposure.hpp"
#include "lfd/geometry.hpp"
#include "lfd/tissue.hpp"

using namespace lfd;

TEST_CASE("segment-triangle intersection") {
  const Triangle t{{-1, 0, -1}, {1, 0, -1}, {0, 0, 1}};
  const auto hit = segment_triangle_hit({0, -1, 0}, {0, 1, 0}, t);
  REQUIRE(hit);
  CHECK(*hit == doctest::Approx(0.5));
  CHECK_FALSE(segment_triangle_hit({5, -1, 0}, {5, 1, 0}, t));
  CHECK_FALSE(segment_triangle_hit({0, 1, 0}, {0, 2, 0}, t));
  // Parallel segment in the plane does not count.
  CHECK_FALSE(segment_triangle_hit({-2, 0, 0}, {2, 0, 0}, t));
}

TEST_CASE("closest point on triangle covers interior, edge and vertex regions") {
  const Triangle t{{0, 0, 0}, {2, 0, 0}, {0, 0, 2}};
  CHECK(closest_point_on_triangle({0.5, 3, 0.5}, t) == Vec3{0.5, 0, 0.5});
  CHECK(closest_point_on_triangle({-1, 0, -1}, t) == Vec3{0, 0, 0});
  CHECK(closest_point_on_triangle({1, 0, -3}, t) == Vec3{1, 0, 0});
  const Vec3 hyp = closest_point_on_triangle({2, 0, 2}, t);
  CHECK(hyp.x == doctest::Approx(1));
  CHECK(hyp.z == doctest::Approx(1));
}

TEST_CASE("sheet construction") {
  const SceneConfig scene;
  const TissueState s = make_sheet(scene);
  CHECK(s.size() == static_cast<std::size_t>(scene.sheet_nx * scene.sheet_nz));
  int fixed = 0;
  for (int iz = 0; iz < s.nz; ++iz)
    for (int ix = 0; ix < s.nx; ++ix) {
      const bool f = s.fixed_mask[s.index(ix, iz)];
      CHECK(f == (ix == 0));
      fixed += f;
    }
  CHECK(fixed == scene.sheet_nz);
  CHECK(s.particles[s.index(0, 0)].x == doctest::Approx(-40));
  CHECK(grid_constraints(s).size() ==
        static_cast<std::size_t>((s.nx - 1) * s.nz + s.nx * (s.nz - 1)));
  CHECK(triangulate(s).size() == static_cast<std::size_t>(2 * (s.nx - 1) * (s.nz - 1)));
  CHECK(max_stretch(s) == doctest::Approx(0.0));
}

TEST_CASE("each attachment edge fixes its own boundary") {
  for (const auto edge : {AttachmentEdge::kXMin, AttachmentEdge::kXMax, AttachmentEdge::kZMin, AttachmentEdge::kZMax}) {
    SceneConfig scene;
    scene.attachment_edge = edge;
    const TissueState s = make_sheet(scene);
    for (int iz = 0; iz < s.nz; ++iz)
      for (int ix = 0; ix < s.nx; ++ix) {
        bool expected = false;
        switch (edge) {
          case AttachmentEdge::kXMin: expected = ix == 0; break;
          case AttachmentEdge::kXMax: expected = ix == s.nx - 1; break;
          case AttachmentEdge::kZMin: expected = iz == 0; break;
          case AttachmentEdge::kZMax: expected = iz == s.nz - 1; break;
        }
        CHECK(s.fixed_mask[s.index(ix, iz)] == expected);
      }
  }
}

TEST_CASE("solver keeps fixed particles and pins the grasp") {
  const SceneConfig scene;
  TissueState s = make_sheet(scene);
  const int g = s.index(6, 4);
  s.grasped_particle = g;
  const Vec3 target = s.rest_positions[g] + Vec3{-10, 25, 3};
  const TissueState out = solve_tissue(s, target, scene.solver_iterations);
  CHECK(out.particles[g] == target);
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out.fixed_mask[i]) CHECK(out.particles[i] == s.rest_positions[i]);
  CHECK_THROWS_AS(solve_tissue(s, target, 0), ContractViolation);
}

TEST_CASE("solver is deterministic and converges toward the stretch limit") {
  const SceneConfig scene;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> lift(0, 40), lat(-15, 15);
  int checked = 0;
  for (int trial = 0; trial < 200 && checked < 30; ++trial) {
    TissueState s = make_sheet(scene);
    const int gx = 1 + static_cast<int>(rng() % (s.nx - 1));
    const int gz = static_cast<int>(rng() % s.nz);
    const int g = s.index(gx, gz);
    const Vec3 target = s.rest_positions[g] + Vec3{lat(rng), lift(rng), lat(rng)};
    // Only targets that a slack grid path from every fixed particle can reach.
    bool reachable = true;
    for (int iz = 0; iz < s.nz; ++iz) {
      const int f = s.index(0, iz);
      const double path = (gx + std::abs(gz - iz)) * scene.rest_spacing_x();
      if (distance(target, s.rest_positions[f]) > path) reachable = false;
    }
    if (!reachable) continue;
    ++checked;
    s.grasped_particle = g;
    TissueState a = s;
    TissueState b = s;
    for (int k = 0; k < 100; ++k) {
      a = solve_tissue(a, target, scene.solver_iterations);
      b = solve_tissue(b, target, scene.solver_iterations);
    }
    CHECK(a == b);
    CHECK(max_stretch(a) <= scene.stretch_limit);
  }
  CHECK(checked == 30);
}

TEST_CASE("solver leaves a resting sheet untouched") {
  const SceneConfig scene;
  const TissueState s = make_sheet(scene);
  CHECK(solve_tissue(s, {}, scene.solver_iterations) == s);
}

TEST_CASE("hemisphere samples face the viewpoint") {
  const Vec3 c{1, 2, 3};
  const Vec3 eye{10, 40, -5};
  const auto pts = facing_hemisphere_samples(c, 4.0, eye, 200);
  REQUIRE(pts.size() == 200);
  for (const auto& p : pts) {
    CHECK(distance(p, c) == doctest::Approx(4.0));
    CHECK(dot(p - c, eye - c) >= -1e-9);
  }
  CHECK(facing_hemisphere_samples(c, 4.0, eye, 200) == pts);
}

TEST_CASE("exposure fixtures") {
  const SceneConfig scene;
  TissueState rest = make_sheet(scene);
  CHECK(tumour_exposure(scene, rest, scene.te_samples) == 0.0);

  // With no sheet at all the facing hemisphere is fully visible.
  TissueState empty;
  CHECK(tumour_exposure(scene, empty, scene.te_samples) == 1.0);

  // Sheet folded back to the attachment side uncovers the tumour.
  TissueEnv env(scene);
  env.reset({20, 20, 0});
  EnvState st = env.state();
  for (std::size_t i = 0; i < st.tissue.size(); ++i) {
    if (!st.tissue.fixed_mask[i]) st.tissue.particles[i] = st.tissue.rest_positions[i] + Vec3{0, 200, 0};
  }
  env.set_state(st);
  CHECK(env.exposure() == 1.0);
  CHECK_THROWS_AS(tumour_exposure(scene, rest, 0), ContractViolation);
}
