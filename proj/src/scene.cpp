#include "lfd/scene.hpp"

#include <cmath>
#include <cstdio>

#include "lfd/errors.hpp"

namespace lfd {
namespace {

std::string fmt_vec(const Vec3& v) {
  return format_double(v.x) + ", " + format_double(v.y) + ", " + format_double(v.z);
}

Vec3 parse_vec(const std::string& key, const std::string& text) {
  const auto xs = parse_doubles(key, text);
  if (xs.size() != 3) throw ConfigError(key, "expected 3 components");
  return {xs[0], xs[1], xs[2]};
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

std::string_view to_string(AttachmentEdge e) {
  switch (e) {
    case AttachmentEdge::kXMin: return "x_min";
    case AttachmentEdge::kXMax: return "x_max";
    case AttachmentEdge::kZMin: return "z_min";
    case AttachmentEdge::kZMax: return "z_max";
  }
  return "x_min";
}

AttachmentEdge attachment_edge_from_string(std::string_view s) {
  if (s == "x_min") return AttachmentEdge::kXMin;
  if (s == "x_max") return AttachmentEdge::kXMax;
  if (s == "z_min") return AttachmentEdge::kZMin;
  if (s == "z_max") return AttachmentEdge::kZMax;
  throw ConfigError("attachment_edge", "expected one of x_min, x_max, z_min, z_max");
}

void SceneConfig::validate() const {
  require(sheet_width > 0 && sheet_depth > 0, "sheet_extent", "must be positive");
  require(sheet_nx >= 2 && sheet_nz >= 2, "sheet_grid", "must be at least 2x2");
  require(is_finite(sheet_center), "sheet_center", "must be finite");
  require(is_finite(tumour_center), "tumour_center", "must be finite");
  require(tumour_radius > 0, "tumour_radius", "must be positive");
  require(is_finite(target_position), "target_position", "must be finite");
  require(is_finite(camera_position), "camera_position", "must be finite");
  for (int a = 0; a < 3; ++a)
    require(workspace_box.lo[a] < workspace_box.hi[a], "workspace_box", "lo must be below hi");
  // The tumour sits under the sheet, so only its x/z footprint is checked
  // against the workspace.
  require(tumour_center.x >= workspace_box.lo.x && tumour_center.x <= workspace_box.hi.x &&
              tumour_center.z >= workspace_box.lo.z && tumour_center.z <= workspace_box.hi.z,
          "tumour_center", "must lie inside workspace_box footprint");
  require(workspace_box.contains(target_position), "target_position",
          "must lie inside workspace_box");
  require(step_size > 0, "step_size", "must be positive");
  require(grasp_radius > 0, "grasp_radius", "must be positive");
  require(target_radius > 0, "target_radius", "must be positive");
  require(max_episode_steps > 0, "max_episode_steps", "must be positive");
  require(solver_iterations >= 1, "solver_iterations", "must be at least 1");
  require(stretch_limit > 0, "stretch_limit", "must be positive");
  require(te_samples >= 1, "te_samples", "must be at least 1");
}

const std::vector<std::string>& SceneConfig::keys() {
  static const std::vector<std::string> k = {
      "sheet_extent",    "sheet_grid",        "sheet_center",   "attachment_edge",
      "tumour_center",   "tumour_radius",     "target_position", "camera_position",
      "workspace_box",   "step_size",         "grasp_radius",   "target_radius",
      "max_episode_steps", "solver_iterations", "stretch_limit", "te_samples"};
  return k;
}

KeyValueFile SceneConfig::to_kv() const {
  KeyValueFile kv;
  kv.set("sheet_extent", format_double(sheet_width) + ", " + format_double(sheet_depth));
  kv.set("sheet_grid", std::to_string(sheet_nx) + ", " + std::to_string(sheet_nz));
  kv.set("sheet_center", fmt_vec(sheet_center));
  kv.set("attachment_edge", std::string(to_string(attachment_edge)));
  kv.set("tumour_center", fmt_vec(tumour_center));
  kv.set("tumour_radius", format_double(tumour_radius));
  kv.set("target_position", fmt_vec(target_position));
  kv.set("camera_position", fmt_vec(camera_position));
  kv.set("workspace_box", fmt_vec(workspace_box.lo) + ", " + fmt_vec(workspace_box.hi));
  kv.set("step_size", format_double(step_size));
  kv.set("grasp_radius", format_double(grasp_radius));
  kv.set("target_radius", format_double(target_radius));
  kv.set("max_episode_steps", std::to_string(max_episode_steps));
  kv.set("solver_iterations", std::to_string(solver_iterations));
  kv.set("stretch_limit", format_double(stretch_limit));
  kv.set("te_samples", std::to_string(te_samples));
  return kv;
}

SceneConfig SceneConfig::from_kv(const KeyValueFile& kv, SceneConfig c) {
  if (kv.has("sheet_extent")) {
    const auto v = parse_doubles("sheet_extent", kv.get("sheet_extent"));
    if (v.size() != 2) throw ConfigError("sheet_extent", "expected `width, depth`");
    c.sheet_width = v[0];
    c.sheet_depth = v[1];
  }
  if (kv.has("sheet_grid")) {
    const auto v = parse_doubles("sheet_grid", kv.get("sheet_grid"));
    if (v.size() != 2 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1]))
      throw ConfigError("sheet_grid", "expected two integers `nx, nz`");
    c.sheet_nx = static_cast<int>(v[0]);
    c.sheet_nz = static_cast<int>(v[1]);
  }
  if (kv.has("sheet_center")) c.sheet_center = parse_vec("sheet_center", kv.get("sheet_center"));
  if (kv.has("attachment_edge"))
    c.attachment_edge = attachment_edge_from_string(kv.get("attachment_edge"));
  if (kv.has("tumour_center")) c.tumour_center = parse_vec("tumour_center", kv.get("tumour_center"));
  if (kv.has("tumour_radius")) c.tumour_radius = parse_double("tumour_radius", kv.get("tumour_radius"));
  if (kv.has("target_position"))
    c.target_position = parse_vec("target_position", kv.get("target_position"));
  if (kv.has("camera_position"))
    c.camera_position = parse_vec("camera_position", kv.get("camera_position"));
  if (kv.has("workspace_box")) {
    const auto v = parse_doubles("workspace_box", kv.get("workspace_box"));
    if (v.size() != 6) throw ConfigError("workspace_box", "expected 6 numbers `lo.xyz, hi.xyz`");
    c.workspace_box = {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
  }
  if (kv.has("step_size")) c.step_size = parse_double("step_size", kv.get("step_size"));
  if (kv.has("grasp_radius")) c.grasp_radius = parse_double("grasp_radius", kv.get("grasp_radius"));
  if (kv.has("target_radius")) c.target_radius = parse_double("target_radius", kv.get("target_radius"));
  if (kv.has("max_episode_steps"))
    c.max_episode_steps = static_cast<int>(parse_int("max_episode_steps", kv.get("max_episode_steps")));
  if (kv.has("solver_iterations"))
    c.solver_iterations = static_cast<int>(parse_int("solver_iterations", kv.get("solver_iterations")));
  if (kv.has("stretch_limit")) c.stretch_limit = parse_double("stretch_limit", kv.get("stretch_limit"));
  if (kv.has("te_samples"))
    c.te_samples = static_cast<int>(parse_int("te_samples", kv.get("te_samples")));
  c.validate();
  return c;
}

std::string SceneConfig::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(to_kv().to_string())));
  return buf;
}

SceneConfig SceneConfig::full_scale() { return SceneConfig{}; }

SceneConfig SceneConfig::desk_scale() {
  SceneConfig c;
  c.step_size = 2.0;
  c.max_episode_steps = 300;
  // Per-axis residual after sign-greedy moves is up to step/2, so the
  // arrival tolerance has to cover step * sqrt(3) / 2.
  c.target_radius = 2.0;
  return c;
}

}  // namespace lfd
