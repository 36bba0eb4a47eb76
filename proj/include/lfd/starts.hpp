#pragma once

#include <cstdint>
#include <random>

#include "lfd/geometry.hpp"
#include "lfd/scene.hpp"

namespace lfd {

// Horizontal rectangle over the sheet at a fixed start height.
struct StartRegion {
  double x_min = -35.0;
  double x_max = 35.0;
  double z_min = -35.0;
  double z_max = 35.0;
  double y = 20.0;

  // Sheet footprint inset by `inset` mm, `height` mm above the rest plane.
  static StartRegion over_sheet(const SceneConfig& scene, double inset = 5.0, double height = 20.0);
};

// Seeded stream of uniformly drawn start positions; each episode reset takes
// the next one.
class StartSampler {
 public:
  StartSampler(StartRegion region, std::uint64_t seed) : region_(region), rng_(seed) {}
  Vec3 next();

 private:
  StartRegion region_;
  std::mt19937_64 rng_;
};

}  // namespace lfd
