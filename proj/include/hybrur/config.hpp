#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hybrur/losses.hpp"
#include "hybrur/networks.hpp"
#include "hybrur/perceptual.hpp"

namespace hybrur {

/// Training configuration. The JSON document uses these field names
/// verbatim; `weights` is a nested object of the four lambdas.
struct TrainConfig {
  double lr_depth = 0.0002;
  double lr_coeff = 0.0001;
  double lr_disc = 0.0001;
  int64_t decay_start_epoch = 30;
  int64_t total_epochs = 60;
  int64_t batch_size = 16;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  LossWeights weights;
  bool hyp1 = true;
  bool hyp2 = true;
  uint64_t seed = 0;
  int64_t pool_size = 50;

  std::string underwater_dir;
  std::string terrestrial_dir;
  int64_t image_size = 256;
  std::string out_dir = "runs/default";

  int64_t depth_channels = 64;
  int64_t residual_blocks = 6;
  int64_t encoder_channels = 32;
  int64_t encoder_blocks = 4;
  int64_t disc_channels = 64;

  std::string perceptual_encoder = "vgg16";
  std::string perceptual_weights;
  int64_t perceptual_width = 64;
  /// Sum the perceptual term over both reconstructions (x and y).
  bool perceptual_both_directions = true;
  /// Also apply the backscatter term to G's synthetic underwater output.
  bool bhat_on_generated = true;
  double dark_fraction = 0.01;
  int64_t dark_cap = 10000;

  /// Write a restoration preview grid every this many iterations (0 = never).
  int64_t sample_every = 100;

  GeneratorOptions generator_options() const;
  DiscriminatorOptions discriminator_options() const;
  PerceptualSpec perceptual_spec() const;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Parse a JSON document. Unknown keys and type mismatches raise ConfigError.
TrainConfig parse_config(const std::string& json_text);
TrainConfig load_config(const std::filesystem::path& path);
std::string to_json(const TrainConfig& cfg);

}  // namespace hybrur
