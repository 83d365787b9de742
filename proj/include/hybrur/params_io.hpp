#pragma once

#include <filesystem>
#include <string>

#include "hybrur/physics.hpp"

namespace hybrur {

// Key-value documents (JSON) with the nine scalars named
// t_D_r, t_D_g, t_D_b, t_B_r, t_B_g, t_B_b, B_inf_r, B_inf_g, B_inf_b.

std::string params_to_json(const DegradationParams& p);
/// Missing or extra keys raise ConfigError. Ranges are not checked here.
DegradationParams params_from_json(const std::string& text);
DegradationParams load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const DegradationParams& p);

/// Per-image record written by the degrade command.
struct SyntheticManifest {
  std::string image;
  std::string source;
  std::string depth;  // "constant:<z>", "gradient:<far>" or "file:<path>"
  DegradationParams params;
  int image_size = 256;
};

std::string manifest_to_json(const SyntheticManifest& m);
SyntheticManifest manifest_from_json(const std::string& text);
SyntheticManifest load_manifest(const std::filesystem::path& path);

}  // namespace hybrur
