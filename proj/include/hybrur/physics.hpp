#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "hybrur/image.hpp"

namespace hybrur {

/// One scalar per colour channel, indexed R=0, G=1, B=2.
struct ChannelTriple {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  double operator[](std::size_t c) const { return c == 0 ? r : (c == 1 ? g : b); }
  double& operator[](std::size_t c) { return c == 0 ? r : (c == 1 ? g : b); }
  bool operator==(const ChannelTriple&) const = default;
};

/// Water-body "style": per-unit-depth transmissions for the direct signal
/// (t_d = exp(-beta_D)) and for backscatter (t_b = exp(-beta_B)), plus the
/// veiling light the backscatter saturates to.
struct DegradationParams {
  ChannelTriple t_d{0.5, 0.5, 0.5};
  ChannelTriple t_b{0.5, 0.5, 0.5};
  ChannelTriple b_inf{0.8, 0.8, 0.8};

  /// Human-readable list of broken range constraints; empty when valid.
  std::vector<std::string> violations() const;
  void validate() const;

  ChannelTriple beta_d() const;
  ChannelTriple beta_b() const;

  bool operator==(const DegradationParams&) const = default;
};

inline constexpr double kVeilingMin = 0.6;
inline constexpr double kVeilingMax = 1.0;
inline constexpr double kDepthMax = 6.0;
/// Floor on t_d^z before dividing in restore(). Below the smallest direct
/// transmission reachable with t_d >= 0.2 and z <= 6 (0.2^6 = 6.4e-5), so
/// restore() stays an exact inverse there and only clips degenerate inputs.
inline constexpr double kRestoreFloor = 1e-5;

/// Per-pixel camera-to-scene distance in metres, [1,H,W] or [N,1,H,W].
struct DepthMap {
  torch::Tensor z;
};

/// Batched parameters, each tensor [N,3]. Broadcast over pixels.
struct ParamTensors {
  torch::Tensor t_d;
  torch::Tensor t_b;
  torch::Tensor b_inf;

  static ParamTensors from(const DegradationParams& p, int64_t batch = 1,
                           torch::TensorOptions opts = torch::kFloat32);
  DegradationParams at(int64_t index) const;
  int64_t batch() const { return t_d.size(0); }
  ParamTensors detach() const { return {t_d.detach(), t_b.detach(), b_inf.detach()}; }
};

/// Physics output: `image` is clamped to [0,1] for discriminators, metrics
/// and saving; `raw` is the unclamped value that losses consume.
struct Rendered {
  torch::Tensor image;
  torch::Tensor raw;
};

/// I_c = J_c * t_d^z + B_inf * (1 - t_b^z). Differentiable w.r.t. every
/// argument through a hand-written backward pass.
Rendered degrade(const torch::Tensor& clean, const torch::Tensor& depth, const ParamTensors& p);
ImageRGB degrade(const ImageRGB& clean, const DepthMap& depth, const DegradationParams& p);

/// J_c = (I_c - B_inf * (1 - t_b^z)) / max(t_d^z, floor).
Rendered restore(const torch::Tensor& observed, const torch::Tensor& depth, const ParamTensors& p,
                 double floor = kRestoreFloor);
ImageRGB restore(const ImageRGB& observed, const DepthMap& depth, const DegradationParams& p);

/// B_inf * (1 - t_b^z), nondecreasing in z. Output has three channels.
torch::Tensor estimate_backscatter(const torch::Tensor& depth, const ParamTensors& p);
ImageRGB estimate_backscatter(const DepthMap& depth, const DegradationParams& p);

namespace pixel {

/// Value of a per-pixel model and its partials with respect to the image
/// input (J for degrade, I for restore), depth, t_d, t_b and B_inf.
struct Partials {
  double value = 0.0;
  double d_image = 0.0;
  double d_depth = 0.0;
  double d_t_d = 0.0;
  double d_t_b = 0.0;
  double d_b_inf = 0.0;
};

Partials degrade(double clean, double z, double t_d, double t_b, double b_inf);
Partials restore(double observed, double z, double t_d, double t_b, double b_inf,
                 double floor = kRestoreFloor);

}  // namespace pixel

struct FitOptions {
  int grid_steps = 80;           // per transmission axis in the coarse search
  int grid_pixels = 2048;        // pixels used by the coarse search
  int max_iterations = 200;      // Levenberg-Marquardt refinement
  double residual_threshold = 1e-6;
};

struct FitResult {
  DegradationParams params;
  double residual = 0.0;  // mean squared model residual over fitted pixels
  /// Depth is identically zero: no parameter is identifiable.
  bool flat_residual = false;
  /// Depth is constant: only B_inf * (1 - t_b^z) is identifiable, not its factors.
  bool backscatter_degenerate = false;
  /// A transmission sits on t = 1, outside the open interval (0,1).
  bool boundary = false;
};

class NonConvergence : public std::runtime_error {
 public:
  explicit NonConvergence(FitResult best);
  const FitResult& best() const noexcept { return best_; }
  double best_residual() const noexcept { return best_.residual; }

 private:
  FitResult best_;
};

/// Recover constant per-channel parameters from an (observed, clean, depth)
/// triple by coarse grid search and Levenberg-Marquardt refinement. Pixels
/// clipped at 0 or 1 in the observation are ignored.
/// Throws NonConvergence when the best residual exceeds the threshold.
FitResult fit_constant_params(const ImageRGB& observed, const ImageRGB& clean, const DepthMap& depth,
                              const FitOptions& opts = {});

}  // namespace hybrur
