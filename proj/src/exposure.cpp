#include "lfd/exposure.hpp"

#include <cmath>
#include <numbers>

#include "lfd/errors.hpp"

namespace lfd {

std::vector<Vec3> facing_hemisphere_samples(const Vec3& center, double radius, const Vec3& viewpoint,
                                            int n) {
  const Vec3 axis = normalized(viewpoint - center);
  // Any unit vector not parallel to axis seeds the tangent frame.
  const Vec3 seed = std::abs(axis.y) < 0.9 ? Vec3{0, 1, 0} : Vec3{1, 0, 0};
  const Vec3 u = normalized(cross(seed, axis));
  const Vec3 v = cross(axis, u);

  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double h = 1.0 - (i + 0.5) / n;  // cos of polar angle, (0, 1)
    const double r = std::sqrt(1.0 - h * h);
    const double phi = i * golden_angle;
    const Vec3 dir = u * (r * std::cos(phi)) + v * (r * std::sin(phi)) + axis * h;
    out.push_back(center + dir * radius);
  }
  return out;
}

double tumour_exposure(const SceneConfig& scene, const TissueState& tissue, int n_samples) {
  if (n_samples < 1) throw ContractViolation("tumour_exposure: n_samples must be >= 1");
  const auto samples = facing_hemisphere_samples(scene.tumour_center, scene.tumour_radius,
                                                 scene.camera_position, n_samples);
  const auto tris = triangulate(tissue);
  int visible = 0;
  for (const auto& s : samples) {
    bool blocked = false;
    for (const auto& tri : tris) {
      if (segment_triangle_hit(s, scene.camera_position, tri)) {
        blocked = true;
        break;
      }
    }
    if (!blocked) ++visible;
  }
  return static_cast<double>(visible) / n_samples;
}

}  // namespace lfd
