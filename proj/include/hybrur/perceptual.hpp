#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <torch/torch.h>

namespace hybrur {

/// VGG16 feature stack truncated after relu3_3. Frozen; gradients reach the
/// input only. The input is expected in [0,1] and ImageNet normalization is
/// applied internally.
class PerceptualEncoderImpl : public torch::nn::Module {
 public:
  /// width = 64 gives the standard VGG16 layer widths (64, 128, 256).
  explicit PerceptualEncoderImpl(int64_t width = 64);
  torch::Tensor forward(const torch::Tensor& rgb);
  int64_t width() const { return width_; }

 private:
  int64_t width_;
  torch::nn::Sequential features_{nullptr};
};
TORCH_MODULE(PerceptualEncoder);

struct PerceptualSpec {
  /// "vgg16": pretrained weights from `weights`; "random": seeded frozen
  /// random features of the same topology.
  std::string kind = "vgg16";
  std::filesystem::path weights;
  int64_t width = 64;
  uint64_t seed = 0;
};

/// Builds and freezes the encoder. Throws ConfigError when the pretrained
/// weights are requested but missing or incompatible.
PerceptualEncoder make_perceptual_encoder(const PerceptualSpec& spec);

}  // namespace hybrur
