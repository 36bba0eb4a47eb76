#include "lfd/tissue.hpp"

#include <algorithm>

#include "lfd/errors.hpp"

namespace lfd {

TissueState make_sheet(const SceneConfig& scene) {
  TissueState t;
  t.nx = scene.sheet_nx;
  t.nz = scene.sheet_nz;
  const double x0 = scene.sheet_center.x - 0.5 * scene.sheet_width;
  const double z0 = scene.sheet_center.z - 0.5 * scene.sheet_depth;
  const double y = scene.sheet_center.y;
  t.rest_positions.reserve(static_cast<std::size_t>(t.nx * t.nz));
  for (int iz = 0; iz < t.nz; ++iz) {
    for (int ix = 0; ix < t.nx; ++ix) {
      t.rest_positions.push_back(
          {x0 + ix * scene.rest_spacing_x(), y, z0 + iz * scene.rest_spacing_z()});
      bool fixed = false;
      switch (scene.attachment_edge) {
        case AttachmentEdge::kXMin: fixed = ix == 0; break;
        case AttachmentEdge::kXMax: fixed = ix == t.nx - 1; break;
        case AttachmentEdge::kZMin: fixed = iz == 0; break;
        case AttachmentEdge::kZMax: fixed = iz == t.nz - 1; break;
      }
      t.fixed_mask.push_back(fixed);
    }
  }
  t.particles = t.rest_positions;
  return t;
}

std::vector<DistanceConstraint> grid_constraints(const TissueState& tissue) {
  std::vector<DistanceConstraint> out;
  if (tissue.particles.empty()) return out;
  for (int iz = 0; iz < tissue.nz; ++iz) {
    for (int ix = 0; ix < tissue.nx; ++ix) {
      const int i = tissue.index(ix, iz);
      if (ix + 1 < tissue.nx) {
        const int j = tissue.index(ix + 1, iz);
        out.push_back({i, j, distance(tissue.rest_positions[i], tissue.rest_positions[j])});
      }
      if (iz + 1 < tissue.nz) {
        const int j = tissue.index(ix, iz + 1);
        out.push_back({i, j, distance(tissue.rest_positions[i], tissue.rest_positions[j])});
      }
    }
  }
  return out;
}

std::vector<Triangle> triangulate(const TissueState& tissue) {
  std::vector<Triangle> tris;
  if (tissue.particles.empty()) return tris;
  tris.reserve(static_cast<std::size_t>(2 * (tissue.nx - 1) * (tissue.nz - 1)));
  const auto& p = tissue.particles;
  for (int iz = 0; iz + 1 < tissue.nz; ++iz) {
    for (int ix = 0; ix + 1 < tissue.nx; ++ix) {
      const int a = tissue.index(ix, iz);
      const int b = tissue.index(ix + 1, iz);
      const int c = tissue.index(ix + 1, iz + 1);
      const int d = tissue.index(ix, iz + 1);
      tris.push_back({p[a], p[b], p[c]});
      tris.push_back({p[a], p[c], p[d]});
    }
  }
  return tris;
}

TissueState solve_tissue(TissueState tissue, const Vec3& grasp_target, int iterations) {
  if (iterations < 1) throw ContractViolation("solve_tissue: iterations must be >= 1");
  const auto n = tissue.size();
  if (n == 0) return tissue;

  std::vector<double> inv_mass(n, 1.0);
  for (std::size_t i = 0; i < n; ++i)
    if (tissue.fixed_mask[i]) inv_mass[i] = 0.0;
  if (tissue.grasped_particle) {
    const auto g = static_cast<std::size_t>(*tissue.grasped_particle);
    tissue.particles[g] = grasp_target;
    inv_mass[g] = 0.0;
  }

  const auto constraints = grid_constraints(tissue);
  auto& p = tissue.particles;
  for (int it = 0; it < iterations; ++it) {
    for (const auto& c : constraints) {
      const double wsum = inv_mass[c.i] + inv_mass[c.j];
      if (wsum == 0.0) continue;
      const Vec3 d = p[c.j] - p[c.i];
      const double len = norm(d);
      if (len <= c.rest) continue;
      const Vec3 corr = d * ((len - c.rest) / (len * wsum));
      p[c.i] += corr * inv_mass[c.i];
      p[c.j] -= corr * inv_mass[c.j];
    }
  }
  return tissue;
}

double max_stretch(const TissueState& tissue) {
  double worst = 0.0;
  for (const auto& c : grid_constraints(tissue))
    worst = std::max(worst, distance(tissue.particles[c.i], tissue.particles[c.j]) / c.rest - 1.0);
  return worst;
}

}  // namespace lfd
