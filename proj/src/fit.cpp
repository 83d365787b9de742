#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "hybrur/errors.hpp"
#include "hybrur/physics.hpp"

namespace hybrur {

namespace {

constexpr double kTransMin = 1e-6;
constexpr double kTransMax = 1.0;
constexpr double kBoundaryTol = 1e-6;

struct Samples {
  std::vector<double> clean, depth, observed;
};

struct ChannelFit {
  double t_d = 0.5, t_b = 0.5, b_inf = 0.8;
  double sse = 0.0;
  std::size_t count = 0;
};

double sse_of(const Samples& s, double t_d, double t_b, double b_inf) {
  double acc = 0.0;
  for (std::size_t i = 0; i < s.clean.size(); ++i) {
    const double r = s.clean[i] * std::pow(t_d, s.depth[i]) + b_inf * (1.0 - std::pow(t_b, s.depth[i])) -
                     s.observed[i];
    acc += r * r;
  }
  return acc;
}

double best_veiling(const Samples& s, const std::vector<double>& direct, const std::vector<double>& scatter) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.clean.size(); ++i) {
    const double occl = 1.0 - scatter[i];
    num += occl * (s.observed[i] - s.clean[i] * direct[i]);
    den += occl * occl;
  }
  if (den <= 0.0) return 0.5 * (kVeilingMin + kVeilingMax);
  return std::clamp(num / den, kVeilingMin, kVeilingMax);
}

ChannelFit coarse_search(const Samples& s, int steps) {
  ChannelFit best;
  best.sse = std::numeric_limits<double>::infinity();
  std::vector<double> direct(s.clean.size()), scatter(s.clean.size());
  for (int i = 0; i < steps; ++i) {
    const double t_d = kTransMin + (kTransMax - kTransMin) * i / (steps - 1);
    for (std::size_t k = 0; k < direct.size(); ++k) direct[k] = std::pow(t_d, s.depth[k]);
    for (int j = 0; j < steps; ++j) {
      const double t_b = kTransMin + (kTransMax - kTransMin) * j / (steps - 1);
      for (std::size_t k = 0; k < scatter.size(); ++k) scatter[k] = std::pow(t_b, s.depth[k]);
      const double b = best_veiling(s, direct, scatter);
      double acc = 0.0;
      for (std::size_t k = 0; k < direct.size(); ++k) {
        const double r = s.clean[k] * direct[k] + b * (1.0 - scatter[k]) - s.observed[k];
        acc += r * r;
      }
      if (acc < best.sse) best = {t_d, t_b, b, acc, direct.size()};
    }
  }
  return best;
}

// Box-constrained Levenberg-Marquardt on (t_d, t_b, B_inf) using the
// analytic per-pixel partials.
ChannelFit refine(const Samples& s, ChannelFit start, int max_iterations) {
  Eigen::Vector3d theta(start.t_d, start.t_b, start.b_inf);
  const Eigen::Vector3d lo(kTransMin, kTransMin, kVeilingMin);
  const Eigen::Vector3d hi(kTransMax, kTransMax, kVeilingMax);
  double sse = sse_of(s, theta[0], theta[1], theta[2]);
  double lambda = 1e-3;
  for (int it = 0; it < max_iterations && sse > 0.0; ++it) {
    Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
    Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < s.clean.size(); ++i) {
      const auto p = pixel::degrade(s.clean[i], s.depth[i], theta[0], theta[1], theta[2]);
      const Eigen::Vector3d jac(p.d_t_d, p.d_t_b, p.d_b_inf);
      const double r = p.value - s.observed[i];
      jtj.noalias() += jac * jac.transpose();
      jtr.noalias() += jac * r;
    }
    bool improved = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      Eigen::Matrix3d damped = jtj;
      damped.diagonal() += lambda * (jtj.diagonal().array() + 1e-12).matrix();
      const Eigen::Vector3d step = damped.ldlt().solve(-jtr);
      const Eigen::Vector3d cand = (theta + step).cwiseMax(lo).cwiseMin(hi);
      const double cand_sse = sse_of(s, cand[0], cand[1], cand[2]);
      if (std::isfinite(cand_sse) && cand_sse < sse) {
        const double change = (cand - theta).cwiseAbs().maxCoeff();
        theta = cand;
        sse = cand_sse;
        lambda = std::max(lambda * 0.3, 1e-12);
        improved = true;
        if (change < 1e-15) it = max_iterations;
        break;
      }
      lambda *= 10.0;
    }
    if (!improved) break;
  }
  return {theta[0], theta[1], theta[2], sse, s.clean.size()};
}

}  // namespace

FitResult fit_constant_params(const ImageRGB& observed, const ImageRGB& clean, const DepthMap& depth,
                              const FitOptions& opts) {
  auto obs = observed.data.detach().to(torch::kCPU, torch::kFloat64).contiguous();
  auto cln = clean.data.detach().to(torch::kCPU, torch::kFloat64).contiguous();
  auto z = depth.z.detach().to(torch::kCPU, torch::kFloat64).reshape({-1}).contiguous();
  if (obs.dim() != 3 || obs.sizes() != cln.sizes() || z.numel() != obs.size(1) * obs.size(2))
    throw ContractViolation("fit_constant_params: observed, clean and depth shapes disagree");

  const int64_t n = z.numel();
  const double* zp = z.data_ptr<double>();
  const double z_min = *std::min_element(zp, zp + n);
  const double z_max = *std::max_element(zp, zp + n);

  FitResult result;
  result.flat_residual = z_max <= 0.0;
  result.backscatter_degenerate = !result.flat_residual && (z_max - z_min) < 1e-9;

  double total_sse = 0.0;
  std::size_t total_count = 0;
  for (int c = 0; c < 3; ++c) {
    const double* op = obs[c].data_ptr<double>();
    const double* cp = cln[c].data_ptr<double>();
    Samples all;
    for (int64_t i = 0; i < n; ++i) {
      if (op[i] <= 0.0 || op[i] >= 1.0) continue;  // clipped by the 8-bit range
      all.clean.push_back(cp[i]);
      all.depth.push_back(zp[i]);
      all.observed.push_back(op[i]);
    }
    if (all.clean.empty()) continue;

    ChannelFit fit;
    if (result.flat_residual) {
      fit.sse = sse_of(all, fit.t_d, fit.t_b, fit.b_inf);
    } else {
      Samples grid;
      const std::size_t stride =
          std::max<std::size_t>(1, all.clean.size() / static_cast<std::size_t>(opts.grid_pixels));
      for (std::size_t i = 0; i < all.clean.size(); i += stride) {
        grid.clean.push_back(all.clean[i]);
        grid.depth.push_back(all.depth[i]);
        grid.observed.push_back(all.observed[i]);
      }
      fit = refine(all, coarse_search(grid, opts.grid_steps), opts.max_iterations);
    }
    result.params.t_d[c] = fit.t_d;
    result.params.t_b[c] = fit.t_b;
    result.params.b_inf[c] = fit.b_inf;
    if (!result.flat_residual && (fit.t_d >= 1.0 - kBoundaryTol || fit.t_b >= 1.0 - kBoundaryTol))
      result.boundary = true;
    total_sse += fit.sse;
    total_count += all.clean.size();
  }
  result.residual = total_count > 0 ? total_sse / static_cast<double>(total_count) : 0.0;
  if (!(result.residual <= opts.residual_threshold)) throw NonConvergence(result);
  return result;
}

}  // namespace hybrur
