#pragma once

#include <cstdint>
#include <vector>

#include <torch/torch.h>

#include "hybrur/physics.hpp"

namespace hybrur {

struct GeneratorOptions {
  int64_t image_size = 256;
  int64_t depth_channels = 64;   // width of the depth-net stem
  int64_t residual_blocks = 6;
  int64_t encoder_channels = 32; // width of the first encoder block
  int64_t encoder_blocks = 4;
  /// Feed the depth map to the attenuation and backscatter encoders.
  bool hyp1 = true;
};

struct DiscriminatorOptions {
  int64_t channels = 64;
  int64_t blocks = 3;
  int64_t scales = 2;
};

/// Residual encoder-decoder producing the scene depth map. The final layer
/// has no normalization or activation; its output u is mapped to
/// clamp(3 + 3u, 0, 6) metres.
class DepthNetImpl : public torch::nn::Module {
 public:
  DepthNetImpl(int64_t channels, int64_t residual_blocks);
  torch::Tensor forward(const torch::Tensor& x);
  /// Raw linear output before the range mapping.
  torch::Tensor forward_raw(const torch::Tensor& x);
  torch::nn::Conv2d& head() { return head_; }

 private:
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Conv2d head_{nullptr};
};
TORCH_MODULE(DepthNet);

/// Stride-2 Conv-BatchNorm-ReLU blocks, global average pooling and a linear
/// head with three outputs (one per colour channel). Returns logits.
class CoeffEncoderImpl : public torch::nn::Module {
 public:
  CoeffEncoderImpl(int64_t in_channels, int64_t channels, int64_t blocks);
  torch::Tensor forward(const torch::Tensor& x);
  int64_t in_channels() const { return in_channels_; }
  torch::nn::Linear& head() { return head_; }

 private:
  int64_t in_channels_;
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Linear head_{nullptr};
};
TORCH_MODULE(CoeffEncoder);

/// Output of one generator's analysis of an image.
struct Decomposition {
  torch::Tensor depth;  // [N,1,H,W], metres in [0,6]
  ParamTensors params;  // each [N,3]

  /// Range violations (depth, transmissions, veiling light); empty when valid.
  std::vector<std::string> violations() const;
};

/// Four sub-networks: depth, attenuation encoder, backscatter encoder and
/// veiling-light encoder.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(GeneratorOptions opts = {});

  const GeneratorOptions& options() const { return opts_; }

  DepthNet depth{nullptr};
  CoeffEncoder attenuation{nullptr};
  CoeffEncoder backscatter{nullptr};
  CoeffEncoder veiling{nullptr};

 private:
  GeneratorOptions opts_;
};
TORCH_MODULE(Generator);

/// One PatchGAN branch per scale; scale s sees the input average-pooled 2^s times.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(DiscriminatorOptions opts = {});
  std::vector<torch::Tensor> forward(const torch::Tensor& x);
  const DiscriminatorOptions& options() const { return opts_; }

 private:
  DiscriminatorOptions opts_;
  std::vector<torch::nn::Sequential> branches_;
};
TORCH_MODULE(Discriminator);

/// Gaussian(0, std) conv/linear weights, zero biases, norm scales N(1, std).
void init_weights(torch::nn::Module& module, double std = 0.02);

torch::Tensor depth_forward(Generator& gen, const torch::Tensor& img);
/// Per-channel transmissions in (0,1). With use_depth the encoder sees
/// img concatenated with depth / 6.
torch::Tensor coeff_forward(CoeffEncoder& encoder, const torch::Tensor& img, const torch::Tensor& depth,
                            bool use_depth);
/// Veiling light 0.6 + 0.4 * sigmoid(logits).
torch::Tensor veiling_forward(Generator& gen, const torch::Tensor& img);

Decomposition decompose(Generator& gen, const torch::Tensor& img);

struct Generated {
  Rendered fake;
  Decomposition decomposition;
};

/// Terrestrial -> underwater through the forward physics model.
Generated generate_underwater(Generator& g, const torch::Tensor& terrestrial);
/// Underwater -> terrestrial through the inverse physics model.
Generated generate_terrestrial(Generator& f, const torch::Tensor& underwater);

// Cycle legs: the networks see a valid (clamped) image while the physics
// acts on the unclamped output of the previous leg.
Generated generate_underwater(Generator& g, const torch::Tensor& terrestrial, const torch::Tensor& physics_input);
Generated generate_terrestrial(Generator& f, const torch::Tensor& underwater, const torch::Tensor& physics_input);

std::vector<torch::Tensor> discriminate(Discriminator& d, const torch::Tensor& img);

}  // namespace hybrur
