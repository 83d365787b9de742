#pragma once

#include <cstdint>

#include <torch/torch.h>

#include "hybrur/image.hpp"

namespace hybrur {

// All metrics work on a single [3,H,W] image in [0,1] and compute in double.

struct UciqeBreakdown {
  double sigma_c = 0.0;  // std of chroma, Lab units / 100
  double con_l = 0.0;    // mean of top 1% L minus mean of bottom 1% L, / 100
  double mu_s = 0.0;     // mean of chroma / (L + eps), both / 100
  double uciqe = 0.0;

  static constexpr double kC1 = 0.468;
  static constexpr double kC2 = 0.2745;
  static constexpr double kC3 = 0.2576;
  static constexpr double kEps = 1e-6;
  double combine() const { return kC1 * sigma_c + kC2 * con_l + kC3 * mu_s; }
};

UciqeBreakdown uciqe(const ImageRGB& img);

struct LabUBreakdown {
  double d_o = 0.0;  // |mean(a, b)| in Lab units
  double d_a = 0.0;  // 1st to 99th percentile span of a, / 255
  double d_b = 0.0;
  double a_l = 0.0;  // mean L / 100
  double u = 0.0;    // sqrt(d_o) / (a_l d_a d_b), lower is better
  /// Set when a_l, d_a or d_b fell below kFloor and was floored.
  bool degenerate = false;

  static constexpr double kFloor = 1e-6;
};

LabUBreakdown lab_u_index(const ImageRGB& img);
/// Same statistics on planes already in Lab.
LabUBreakdown lab_u_index(const ImageLab& lab);

/// Linear-interpolated percentile (p in [0,100]) of all elements.
double percentile(const torch::Tensor& values, double p);

/// Grayscale SSIM with an 11x11 Gaussian window (sigma 1.5) over the valid
/// region, dynamic range 1. Needs both sides >= 11.
double ssim(const ImageRGB& a, const ImageRGB& b);

/// Standard deviation of the 0..255 grayscale.
double rms_contrast(const ImageRGB& img);

/// Variance of the 4-neighbour Laplacian of the 0..255 grayscale
/// (reflect-101 borders).
double laplacian_variance(const ImageRGB& img);

struct FeatureCounts {
  int64_t sift = 0;
  int64_t harris = 0;
};

/// SIFT keypoints and Harris corners (block 2, aperture 3, k 0.04, above
/// 0.01 of the peak response, 3x3 local maxima) on the 8-bit grayscale.
FeatureCounts feature_counts(const ImageRGB& img);

/// SIFT matches from a to b passing the 0.75 ratio test.
int64_t sift_match_count(const ImageRGB& a, const ImageRGB& b);

}  // namespace hybrur
