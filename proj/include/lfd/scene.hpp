#pragma once

#include <string>
#include <string_view>

#include "lfd/geometry.hpp"
#include "lfd/kv_file.hpp"

namespace lfd {

enum class AttachmentEdge { kXMin, kXMax, kZMin, kZMax };

std::string_view to_string(AttachmentEdge e);
AttachmentEdge attachment_edge_from_string(std::string_view s);

// Scene geometry, episode limits and the deformable-sheet solver settings.
// All lengths in millimetres.
struct SceneConfig {
  double sheet_width = 80.0;  // along x
  double sheet_depth = 80.0;  // along z
  int sheet_nx = 9;
  int sheet_nz = 9;
  Vec3 sheet_center{0.0, 0.0, 0.0};  // rest plane is y = sheet_center.y
  AttachmentEdge attachment_edge = AttachmentEdge::kXMin;

  Vec3 tumour_center{10.0, -6.0, 0.0};
  double tumour_radius = 5.0;
  Vec3 target_position{-20.0, 40.0, 0.0};
  Vec3 camera_position{40.0, 100.0, 0.0};
  Box workspace_box{{-50.0, 0.0, -50.0}, {50.0, 60.0, 50.0}};

  double step_size = 0.5;
  double grasp_radius = 2.0;
  double target_radius = 1.0;
  int max_episode_steps = 2500;

  int solver_iterations = 10;
  double stretch_limit = 0.1;
  int te_samples = 256;

  double rest_spacing_x() const { return sheet_width / (sheet_nx - 1); }
  double rest_spacing_z() const { return sheet_depth / (sheet_nz - 1); }

  // Throws ConfigError naming the first invalid field.
  void validate() const;

  KeyValueFile to_kv() const;
  // Starts from `base`, overrides with keys present in `kv`; keys that
  // are not scene fields are ignored (run configs share the file).
  static SceneConfig from_kv(const KeyValueFile& kv, SceneConfig base);
  static SceneConfig from_kv(const KeyValueFile& kv) { return from_kv(kv, SceneConfig{}); }
  static const std::vector<std::string>& keys();

  // Hex FNV-1a of the canonical key-value text.
  std::string fingerprint() const;

  // Full-scale (0.5 mm / 2500 steps) and the reduced CI profile.
  static SceneConfig full_scale();
  static SceneConfig desk_scale();

  friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

struct RewardConfig {
  double d_max = 1.0;
  double k = 0.5;

  static RewardConfig for_workspace(const Box& workspace) {
    const double d = workspace.diagonal();
    return {d, 0.5 / d};
  }
};

}  // namespace lfd
