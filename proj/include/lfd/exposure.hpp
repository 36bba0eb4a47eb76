#pragma once

#include <vector>

#include "lfd/geometry.hpp"
#include "lfd/scene.hpp"
#include "lfd/tissue.hpp"

namespace lfd {

// Fibonacci-spiral points on the hemisphere of the sphere (center, radius)
// that faces `viewpoint`. Equal-area spacing; deterministic in n.
std::vector<Vec3> facing_hemisphere_samples(const Vec3& center, double radius, const Vec3& viewpoint,
                                            int n);

// Fraction of tumour samples whose segment to the camera crosses no sheet
// triangle.
double tumour_exposure(const SceneConfig& scene, const TissueState& tissue, int n_samples);

}  // namespace lfd
