#include "hybrur/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <opencv2/features2d.hpp>
#include <opencv2/imgproc.hpp>

#include "hybrur/dcp.hpp"
#include "hybrur/errors.hpp"

namespace hybrur {

namespace {

torch::Tensor checked(const ImageRGB& img, const char* op) {
  const auto& t = img.data;
  if (t.dim() != 3 || t.size(0) != 3) throw ContractViolation(std::string(op) + ": expected a [3,H,W] image");
  return t.to(torch::kCPU, torch::kFloat64).contiguous();
}

torch::Tensor gray255(const ImageRGB& img, const char* op) { return rgb_to_gray(checked(img, op))[0] * 255.0; }

double population_std(const torch::Tensor& t) { return t.std(/*unbiased=*/false).item<double>(); }

cv::Mat gray8(const ImageRGB& img, const char* op) {
  auto g = torch::floor(gray255(img, op).clamp(0.0, 255.0) + 0.5).to(torch::kUInt8).contiguous();
  cv::Mat m(static_cast<int>(g.size(0)), static_cast<int>(g.size(1)), CV_8UC1, g.data_ptr<uint8_t>());
  return m.clone();
}

struct SiftResult {
  std::vector<cv::KeyPoint> keypoints;
  cv::Mat descriptors;
};

SiftResult detect_sift(const cv::Mat& gray) {
  SiftResult r;
  cv::SIFT::create()->detectAndCompute(gray, cv::noArray(), r.keypoints, r.descriptors);
  return r;
}

torch::Tensor gaussian_window(int size, double sigma) {
  auto x = torch::arange(size, torch::kFloat64) - (size - 1) / 2.0;
  auto g = torch::exp(-(x * x) / (2.0 * sigma * sigma));
  g = g / g.sum();
  return torch::outer(g, g).view({1, 1, size, size});
}

}  // namespace

double percentile(const torch::Tensor& values, double p) {
  auto v = values.to(torch::kFloat64).flatten();
  if (v.numel() == 0) throw ContractViolation("percentile: empty input");
  auto sorted = std::get<0>(v.sort());
  const double pos = p / 100.0 * static_cast<double>(v.numel() - 1);
  const auto lo = static_cast<int64_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.numel() - 1);
  const double frac = pos - static_cast<double>(lo);
  const double a = sorted[lo].item<double>();
  const double b = sorted[hi].item<double>();
  return a + (b - a) * frac;
}

UciqeBreakdown uciqe(const ImageRGB& img) {
  auto lab = rgb_to_lab(checked(img, "uciqe"));
  auto L = lab.L.flatten() / 100.0;
  auto chroma = torch::sqrt(lab.a.flatten().pow(2) + lab.b.flatten().pow(2)) / 100.0;

  UciqeBreakdown out;
  out.sigma_c = population_std(chroma);
  const int64_t n = L.numel();
  const int64_t k = dark_pixel_count(n, 0.01, n);
  auto sorted = std::get<0>(L.sort());
  out.con_l = sorted.narrow(0, n - k, k).mean().item<double>() - sorted.narrow(0, 0, k).mean().item<double>();
  out.mu_s = (chroma / (L + UciqeBreakdown::kEps)).mean().item<double>();
  out.uciqe = out.combine();
  return out;
}

LabUBreakdown lab_u_index(const ImageLab& lab) {
  LabUBreakdown out;
  const double ma = lab.a.to(torch::kFloat64).mean().item<double>();
  const double mb = lab.b.to(torch::kFloat64).mean().item<double>();
  out.d_o = std::hypot(ma, mb);
  out.d_a = (percentile(lab.a, 99.0) - percentile(lab.a, 1.0)) / 255.0;
  out.d_b = (percentile(lab.b, 99.0) - percentile(lab.b, 1.0)) / 255.0;
  out.a_l = lab.L.to(torch::kFloat64).mean().item<double>() / 100.0;
  auto floored = [&](double v) {
    if (v < LabUBreakdown::kFloor) {
      out.degenerate = true;
      return LabUBreakdown::kFloor;
    }
    return v;
  };
  const double denom = floored(out.a_l) * floored(out.d_a) * floored(out.d_b);
  out.u = std::sqrt(out.d_o) / denom;
  return out;
}

LabUBreakdown lab_u_index(const ImageRGB& img) { return lab_u_index(rgb_to_lab(checked(img, "lab_u_index"))); }

double ssim(const ImageRGB& a, const ImageRGB& b) {
  auto ta = checked(a, "ssim");
  auto tb = checked(b, "ssim");
  if (ta.sizes() != tb.sizes()) throw ContractViolation("ssim: images differ in shape");
  constexpr int kWindow = 11;
  if (ta.size(1) < kWindow || ta.size(2) < kWindow) throw ContractViolation("ssim: image smaller than the window");

  auto x = rgb_to_gray(ta).unsqueeze(0);
  auto y = rgb_to_gray(tb).unsqueeze(0);
  auto w = gaussian_window(kWindow, 1.5);
  auto filt = [&](const torch::Tensor& t) { return torch::conv2d(t, w); };
  auto mx = filt(x);
  auto my = filt(y);
  auto sxx = filt(x * x) - mx * mx;
  auto syy = filt(y * y) - my * my;
  auto sxy = filt(x * y) - mx * my;
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  auto map = ((2.0 * mx * my + c1) * (2.0 * sxy + c2)) / ((mx * mx + my * my + c1) * (sxx + syy + c2));
  return map.mean().item<double>();
}

double rms_contrast(const ImageRGB& img) { return population_std(gray255(img, "rms_contrast")); }

double laplacian_variance(const ImageRGB& img) {
  auto g = gray255(img, "laplacian_variance");
  const int64_t h = g.size(0), w = g.size(1);
  if (h < 2 || w < 2) throw ContractViolation("laplacian_variance: image must be at least 2x2");
  // Reflect-101 padding by one pixel on each side.
  auto p = torch::constant_pad_nd(g, {1, 1, 1, 1});
  p.narrow(0, 1, h).select(1, 0).copy_(g.select(1, 1));
  p.narrow(0, 1, h).select(1, w + 1).copy_(g.select(1, w - 2));
  p.select(0, 0).copy_(p.select(0, 2));
  p.select(0, h + 1).copy_(p.select(0, h - 1));
  auto center = p.narrow(0, 1, h).narrow(1, 1, w);
  auto lap = p.narrow(0, 0, h).narrow(1, 1, w) + p.narrow(0, 2, h).narrow(1, 1, w) +
             p.narrow(0, 1, h).narrow(1, 0, w) + p.narrow(0, 1, h).narrow(1, 2, w) - 4.0 * center;
  return lap.var(/*unbiased=*/false).item<double>();
}

FeatureCounts feature_counts(const ImageRGB& img) {
  FeatureCounts out;
  cv::Mat gray = gray8(img, "feature_counts");
  std::vector<cv::KeyPoint> kps;
  cv::SIFT::create()->detect(gray, kps);
  out.sift = static_cast<int64_t>(kps.size());

  cv::Mat f, response, dilated;
  gray.convertTo(f, CV_32F);
  cv::cornerHarris(f, response, 2, 3, 0.04);
  double peak = 0.0;
  cv::minMaxLoc(response, nullptr, &peak);
  if (peak <= 0.0) return out;
  cv::dilate(response, dilated, cv::Mat::ones(3, 3, CV_8U));
  const float thresh = static_cast<float>(0.01 * peak);
  for (int r = 0; r < response.rows; ++r)
    for (int c = 0; c < response.cols; ++c) {
      const float v = response.at<float>(r, c);
      if (v > thresh && v == dilated.at<float>(r, c)) ++out.harris;
    }
  return out;
}

int64_t sift_match_count(const ImageRGB& a, const ImageRGB& b) {
  auto sa = detect_sift(gray8(a, "sift_match_count"));
  auto sb = detect_sift(gray8(b, "sift_match_count"));
  if (sa.descriptors.empty() || sb.descriptors.empty()) return 0;
  std::vector<std::vector<cv::DMatch>> knn;
  cv::BFMatcher(cv::NORM_L2).knnMatch(sa.descriptors, sb.descriptors, knn, 2);
  int64_t good = 0;
  for (const auto& m : knn) {
    if (m.size() == 1) ++good;
    else if (m.size() >= 2 && m[0].distance <= 0.75f * m[1].distance) ++good;
  }
  return good;
}

}  // namespace hybrur
