#pragma once

#include <optional>
#include <vector>

#include "lfd/geometry.hpp"
#include "lfd/scene.hpp"

namespace lfd {

// Grid-adjacent particle pair with its rest length.
struct DistanceConstraint {
  int i;
  int j;
  double rest;
};

// Particle grid of the fat sheet, row-major with x fastest: index = iz * nx + ix.
struct TissueState {
  int nx = 0;
  int nz = 0;
  std::vector<Vec3> particles;
  std::vector<Vec3> rest_positions;
  std::vector<bool> fixed_mask;
  std::optional<int> grasped_particle;

  std::size_t size() const { return particles.size(); }
  int index(int ix, int iz) const { return iz * nx + ix; }

  friend bool operator==(const TissueState&, const TissueState&) = default;
};

TissueState make_sheet(const SceneConfig& scene);

// Horizontal and vertical neighbours, in a fixed order.
std::vector<DistanceConstraint> grid_constraints(const TissueState& tissue);

// Two triangles per grid cell; empty for an empty sheet.
std::vector<Triangle> triangulate(const TissueState& tissue);

// Position-based relaxation. The grasped particle is pinned to
// `grasp_target`, fixed particles never move, and each iteration projects
// every stretched grid edge back toward its rest length (Gauss-Seidel, fixed
// order). Edges shorter than rest are left alone so the sheet folds freely.
TissueState solve_tissue(TissueState tissue, const Vec3& grasp_target, int iterations);

// Largest (length / rest - 1) over all grid edges.
double max_stretch(const TissueState& tissue);

}  // namespace lfd
