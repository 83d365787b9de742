#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "hybrur/image.hpp"

namespace hybrur {

/// {0,1} mask selecting the darkest dark-channel pixels, [1,H,W] or [N,1,H,W].
struct BinaryMask {
  torch::Tensor m;

  int64_t count() const { return m.sum().item<int64_t>(); }
};

inline constexpr double kDarkFraction = 0.01;
inline constexpr int64_t kDarkCap = 10000;

/// Pixelwise minimum over the three colour channels (window size 1).
ImageGray dcp_map(const ImageRGB& img);
torch::Tensor dcp_map(const torch::Tensor& rgb);

/// Number of pixels darkest_mask selects: min(ceil(fraction * pixels), cap).
int64_t dark_pixel_count(int64_t pixels, double fraction = kDarkFraction, int64_t cap = kDarkCap);

/// Marks the k darkest pixels, ties broken by row-major index. The result
/// never carries gradient.
BinaryMask darkest_mask(const ImageGray& dcp, double fraction = kDarkFraction, int64_t cap = kDarkCap);
torch::Tensor darkest_mask(const torch::Tensor& dcp, double fraction = kDarkFraction,
                           int64_t cap = kDarkCap);

}  // namespace hybrur
