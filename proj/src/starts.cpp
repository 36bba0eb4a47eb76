#include "lfd/starts.hpp"

namespace lfd {

StartRegion StartRegion::over_sheet(const SceneConfig& scene, double inset, double height) {
  StartRegion r;
  r.x_min = scene.sheet_center.x - 0.5 * scene.sheet_width + inset;
  r.x_max = scene.sheet_center.x + 0.5 * scene.sheet_width - inset;
  r.z_min = scene.sheet_center.z - 0.5 * scene.sheet_depth + inset;
  r.z_max = scene.sheet_center.z + 0.5 * scene.sheet_depth - inset;
  r.y = scene.sheet_center.y + height;
  return r;
}

Vec3 StartSampler::next() {
  std::uniform_real_distribution<double> ux(region_.x_min, region_.x_max);
  std::uniform_real_distribution<double> uz(region_.z_min, region_.z_max);
  const double x = ux(rng_);
  const double z = uz(rng_);
  return {x, region_.y, z};
}

}  // namespace lfd
