#pragma once

// Hand-rolled generators and independent scalar oracles shared by the tests.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <torch/torch.h>

#include "hybrur/physics.hpp"

namespace testing {

class Gen {
 public:
  explicit Gen(uint64_t seed) : rng_(seed) {}
  double uniform(double lo = 0.0, double hi = 1.0) {
    return lo + (hi - lo) * static_cast<double>(rng_() >> 11) * 0x1.0p-53;
  }
  int64_t integer(int64_t lo, int64_t hi) {  // inclusive
    return lo + static_cast<int64_t>(rng_() % static_cast<uint64_t>(hi - lo + 1));
  }
  uint64_t seed() { return rng_(); }

  torch::Tensor tensor(std::vector<int64_t> shape, double lo, double hi,
                       torch::ScalarType type = torch::kFloat64) {
    auto t = torch::empty(shape, torch::kFloat64);
    auto* p = t.data_ptr<double>();
    for (int64_t i = 0; i < t.numel(); ++i) p[i] = uniform(lo, hi);
    return t.to(type);
  }
  torch::Tensor image(int64_t h, int64_t w, torch::ScalarType type = torch::kFloat64) {
    return tensor({3, h, w}, 0.0, 1.0, type);
  }
  // Values on the 8-bit lattice, so ties are common.
  torch::Tensor image_8bit(int64_t h, int64_t w, int levels = 256) {
    auto t = torch::empty({3, h, w}, torch::kFloat64);
    auto* p = t.data_ptr<double>();
    for (int64_t i = 0; i < t.numel(); ++i) p[i] = static_cast<double>(integer(0, levels - 1)) / (levels - 1);
    return t;
  }
  hybrur::DegradationParams params(double t_lo = 0.2, double t_hi = 0.99) {
    hybrur::DegradationParams p;
    for (std::size_t c = 0; c < 3; ++c) {
      p.t_d[c] = uniform(t_lo, t_hi);
      p.t_b[c] = uniform(t_lo, t_hi);
      p.b_inf[c] = uniform(0.6, 1.0);
    }
    return p;
  }

 private:
  std::mt19937_64 rng_;
};

// Textbook sRGB -> CIELab for one pixel (D65 white from the matrix rows).
inline std::array<double, 3> lab_pixel(double r, double g, double b) {
  auto lin = [](double v) { return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4); };
  const double R = lin(r), G = lin(g), B = lin(b);
  const double X = 0.4124564 * R + 0.3575761 * G + 0.1804375 * B;
  const double Y = 0.2126729 * R + 0.7151522 * G + 0.0721750 * B;
  const double Z = 0.0193339 * R + 0.1191920 * G + 0.9503041 * B;
  const double Xn = 0.4124564 + 0.3575761 + 0.1804375;
  const double Yn = 0.2126729 + 0.7151522 + 0.0721750;
  const double Zn = 0.0193339 + 0.1191920 + 0.9503041;
  auto f = [](double t) {
    const double d = 6.0 / 29.0;
    return t > d * d * d ? std::cbrt(t) : t / (3 * d * d) + 4.0 / 29.0;
  };
  const double fx = f(X / Xn), fy = f(Y / Yn), fz = f(Z / Zn);
  return {std::clamp(116.0 * fy - 16.0, 0.0, 100.0), 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

inline double gray_pixel(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

// Per-test scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("hybrur_" + tag + "_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline double max_abs_diff(const torch::Tensor& a, const torch::Tensor& b) {
  return (a.to(torch::kFloat64) - b.to(torch::kFloat64)).abs().max().item<double>();
}

}  // namespace testing
