#pragma once

#include <optional>
#include <string>

#include "lfd/nn/mlp.hpp"
#include "lfd/scene.hpp"

namespace lfd {

struct Checkpoint {
  std::string algorithm;  // "ppo" or "gail"
  std::int64_t global_step = 0;
  std::uint64_t seed = 0;
  SceneConfig scene;
  nn::Mlp policy;
  nn::Mlp value;
  std::optional<nn::Mlp> discriminator;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string checkpoint_to_string(const Checkpoint& c);
Checkpoint checkpoint_from_string(const std::string& text);

// Throws IoError when the file cannot be written/read, FormatError on bad
// content, FingerprintMismatch when `expected` is given, differs from the
// stored scene and `allow_mismatch` is false.
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path, const std::optional<SceneConfig>& expected = std::nullopt,
                           bool allow_mismatch = false);

}  // namespace lfd
