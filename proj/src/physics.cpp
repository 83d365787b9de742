#include "hybrur/physics.hpp"

#include <cmath>
#include <sstream>

#include "hybrur/errors.hpp"

namespace hybrur {

namespace {

using torch::autograd::AutogradContext;
using torch::autograd::tensor_list;

constexpr const char* kChannelNames[3] = {"r", "g", "b"};

struct Prepared {
  torch::Tensor image;  // [N,3,H,W]
  torch::Tensor depth;  // [N,1,H,W]
  torch::Tensor t_d, t_b, b_inf;  // [N,3,1,1]
  bool unbatched = false;
};

torch::Tensor as_column(const torch::Tensor& p, const char* name) {
  auto t = p.dim() == 1 ? p.unsqueeze(0) : p;
  if (t.dim() != 2 || t.size(1) != 3)
    throw ContractViolation(std::string("physics: parameter ") + name + " must be [N,3]");
  return t.view({t.size(0), 3, 1, 1});
}

Prepared prepare(const torch::Tensor& image, const torch::Tensor& depth, const ParamTensors& p,
                 const char* op) {
  Prepared out;
  out.unbatched = image.dim() == 3;
  out.image = out.unbatched ? image.unsqueeze(0) : image;
  out.depth = depth.dim() == 3 ? depth.unsqueeze(0) : depth;
  std::ostringstream msg;
  msg << op << ": ";
  if (out.image.dim() != 4 || out.image.size(1) != 3) {
    msg << "image must be [3,H,W] or [N,3,H,W], got " << image.sizes();
    throw ContractViolation(msg.str());
  }
  if (out.depth.dim() != 4 || out.depth.size(1) != 1 || out.depth.size(2) != out.image.size(2) ||
      out.depth.size(3) != out.image.size(3) ||
      (out.depth.size(0) != out.image.size(0) && out.depth.size(0) != 1)) {
    msg << "depth " << depth.sizes() << " does not match image " << image.sizes();
    throw ContractViolation(msg.str());
  }
  out.t_d = as_column(p.t_d, "t_d");
  out.t_b = as_column(p.t_b, "t_b");
  out.b_inf = as_column(p.b_inf, "b_inf");
  for (const auto* t : {&out.t_d, &out.t_b, &out.b_inf}) {
    if (t->size(0) != out.image.size(0) && t->size(0) != 1) {
      msg << "parameter batch " << t->size(0) << " does not match image batch " << out.image.size(0);
      throw ContractViolation(msg.str());
    }
  }
  return out;
}

// t^z computed as exp(z ln t); t is strictly positive by construction.
torch::Tensor power(const torch::Tensor& t, const torch::Tensor& z) { return torch::exp(z * torch::log(t)); }

struct DegradeFunction : public torch::autograd::Function<DegradeFunction> {
  static torch::Tensor forward(AutogradContext* ctx, torch::Tensor clean, torch::Tensor z,
                               torch::Tensor t_d, torch::Tensor t_b, torch::Tensor b_inf) {
    auto direct = power(t_d, z);
    auto scatter = power(t_b, z);
    ctx->save_for_backward({clean, z, t_d, t_b, b_inf, direct, scatter});
    return clean * direct + b_inf * (1.0 - scatter);
  }

  static tensor_list backward(AutogradContext* ctx, tensor_list grads) {
    auto saved = ctx->get_saved_variables();
    const auto& clean = saved[0];
    const auto& z = saved[1];
    const auto& t_d = saved[2];
    const auto& t_b = saved[3];
    const auto& b_inf = saved[4];
    const auto& direct = saved[5];
    const auto& scatter = saved[6];
    const auto& g = grads[0];

    auto d_clean = g * direct;
    auto dz = clean * direct * torch::log(t_d) - b_inf * scatter * torch::log(t_b);
    auto d_depth = (g * dz).sum(1, /*keepdim=*/true);
    auto d_t_d = g * clean * z * direct / t_d;
    auto d_t_b = -g * b_inf * z * scatter / t_b;
    auto d_b_inf = g * (1.0 - scatter);
    return {at::sum_to(d_clean, clean.sizes()), at::sum_to(d_depth, z.sizes()),
            at::sum_to(d_t_d, t_d.sizes()), at::sum_to(d_t_b, t_b.sizes()),
            at::sum_to(d_b_inf, b_inf.sizes())};
  }
};

struct RestoreFunction : public torch::autograd::Function<RestoreFunction> {
  static torch::Tensor forward(AutogradContext* ctx, torch::Tensor observed, torch::Tensor z,
                               torch::Tensor t_d, torch::Tensor t_b, torch::Tensor b_inf, double floor) {
    auto direct = power(t_d, z);
    auto scatter = power(t_b, z);
    auto denom = direct.clamp_min(floor);
    auto active = (direct > floor).to(direct.scalar_type());
    auto restored = (observed - b_inf * (1.0 - scatter)) / denom;
    ctx->save_for_backward({z, t_d, t_b, b_inf, direct, scatter, denom, active, restored});
    return restored;
  }

  static tensor_list backward(AutogradContext* ctx, tensor_list grads) {
    auto saved = ctx->get_saved_variables();
    const auto& z = saved[0];
    const auto& t_d = saved[1];
    const auto& t_b = saved[2];
    const auto& b_inf = saved[3];
    const auto& direct = saved[4];
    const auto& scatter = saved[5];
    const auto& denom = saved[6];
    const auto& active = saved[7];
    const auto& restored = saved[8];
    const auto& g = grads[0];

    auto g_over = g / denom;
    auto d_observed = g_over;
    // Where the floor is active the denominator is constant in z and t_d.
    auto dz = b_inf * scatter * torch::log(t_b) / denom - active * restored * torch::log(t_d);
    auto d_depth = (g * dz).sum(1, /*keepdim=*/true);
    auto d_t_d = -g * active * restored * z * direct / (t_d * denom);
    auto d_t_b = g_over * b_inf * z * scatter / t_b;
    auto d_b_inf = -g_over * (1.0 - scatter);
    return {at::sum_to(d_observed, g.sizes()), at::sum_to(d_depth, z.sizes()),
            at::sum_to(d_t_d, t_d.sizes()), at::sum_to(d_t_b, t_b.sizes()),
            at::sum_to(d_b_inf, b_inf.sizes()), torch::Tensor()};
  }
};

Rendered finish(torch::Tensor raw, bool unbatched) {
  if (unbatched) raw = raw.squeeze(0);
  return Rendered{raw.clamp(0.0, 1.0), raw};
}

}  // namespace

std::vector<std::string> DegradationParams::violations() const {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < 3; ++c) {
    auto check_open = [&](const char* name, double v) {
      if (!std::isfinite(v) || v <= 0.0 || v >= 1.0)
        out.push_back(std::string(name) + "_" + kChannelNames[c] + "=" + std::to_string(v) +
                      " outside (0,1)");
    };
    check_open("t_D", t_d[c]);
    check_open("t_B", t_b[c]);
    const double v = b_inf[c];
    if (!std::isfinite(v) || v < kVeilingMin || v > kVeilingMax)
      out.push_back(std::string("B_inf_") + kChannelNames[c] + "=" + std::to_string(v) +
                    " outside [0.6,1]");
  }
  return out;
}

void DegradationParams::validate() const {
  auto v = violations();
  if (v.empty()) return;
  std::string msg = "invalid degradation parameters:";
  for (const auto& s : v) msg += " " + s + ";";
  throw ContractViolation(msg);
}

ChannelTriple DegradationParams::beta_d() const {
  return {-std::log(t_d.r), -std::log(t_d.g), -std::log(t_d.b)};
}

ChannelTriple DegradationParams::beta_b() const {
  return {-std::log(t_b.r), -std::log(t_b.g), -std::log(t_b.b)};
}

ParamTensors ParamTensors::from(const DegradationParams& p, int64_t batch, torch::TensorOptions opts) {
  auto row = [&](const ChannelTriple& t) {
    return torch::tensor({t.r, t.g, t.b}, torch::kFloat64).to(opts).unsqueeze(0).repeat({batch, 1});
  };
  return {row(p.t_d), row(p.t_b), row(p.b_inf)};
}

DegradationParams ParamTensors::at(int64_t index) const {
  auto triple = [&](const torch::Tensor& t) {
    auto row = t.detach().to(torch::kCPU, torch::kFloat64)[index];
    return ChannelTriple{row[0].item<double>(), row[1].item<double>(), row[2].item<double>()};
  };
  return {triple(t_d), triple(t_b), triple(b_inf)};
}

Rendered degrade(const torch::Tensor& clean, const torch::Tensor& depth, const ParamTensors& p) {
  auto in = prepare(clean, depth, p, "degrade");
  return finish(DegradeFunction::apply(in.image, in.depth, in.t_d, in.t_b, in.b_inf), in.unbatched);
}

Rendered restore(const torch::Tensor& observed, const torch::Tensor& depth, const ParamTensors& p,
                 double floor) {
  auto in = prepare(observed, depth, p, "restore");
  return finish(RestoreFunction::apply(in.image, in.depth, in.t_d, in.t_b, in.b_inf, floor), in.unbatched);
}

torch::Tensor estimate_backscatter(const torch::Tensor& depth, const ParamTensors& p) {
  auto z = depth.dim() == 3 ? depth.unsqueeze(0) : depth;
  if (z.dim() != 4 || z.size(1) != 1)
    throw ContractViolation("estimate_backscatter: depth must be [1,H,W] or [N,1,H,W]");
  auto t_b = as_column(p.t_b, "t_b");
  auto b_inf = as_column(p.b_inf, "b_inf");
  auto out = b_inf * (1.0 - power(t_b, z));
  return depth.dim() == 3 ? out.squeeze(0) : out;
}

ImageRGB degrade(const ImageRGB& clean, const DepthMap& depth, const DegradationParams& p) {
  p.validate();
  auto pt = ParamTensors::from(p, 1, clean.data.options());
  return ImageRGB{degrade(clean.data, depth.z.to(clean.data.options()), pt).image};
}

ImageRGB restore(const ImageRGB& observed, const DepthMap& depth, const DegradationParams& p) {
  p.validate();
  auto pt = ParamTensors::from(p, 1, observed.data.options());
  return ImageRGB{restore(observed.data, depth.z.to(observed.data.options()), pt).image};
}

ImageRGB estimate_backscatter(const DepthMap& depth, const DegradationParams& p) {
  auto pt = ParamTensors::from(p, 1, depth.z.options());
  return ImageRGB{estimate_backscatter(depth.z, pt)};
}

namespace pixel {

Partials degrade(double clean, double z, double t_d, double t_b, double b_inf) {
  const double direct = std::pow(t_d, z);
  const double scatter = std::pow(t_b, z);
  Partials p;
  p.value = clean * direct + b_inf * (1.0 - scatter);
  p.d_image = direct;
  p.d_depth = clean * direct * std::log(t_d) - b_inf * scatter * std::log(t_b);
  p.d_t_d = clean * z * direct / t_d;
  p.d_t_b = -b_inf * z * scatter / t_b;
  p.d_b_inf = 1.0 - scatter;
  return p;
}

Partials restore(double observed, double z, double t_d, double t_b, double b_inf, double floor) {
  const double direct = std::pow(t_d, z);
  const double scatter = std::pow(t_b, z);
  const bool active = direct > floor;
  const double denom = active ? direct : floor;
  Partials p;
  p.value = (observed - b_inf * (1.0 - scatter)) / denom;
  p.d_image = 1.0 / denom;
  p.d_depth = b_inf * scatter * std::log(t_b) / denom - (active ? p.value * std::log(t_d) : 0.0);
  p.d_t_d = active ? -p.value * z / t_d : 0.0;
  p.d_t_b = b_inf * z * scatter / (t_b * denom);
  p.d_b_inf = -(1.0 - scatter) / denom;
  return p;
}

}  // namespace pixel

NonConvergence::NonConvergence(FitResult best)
    : std::runtime_error("fit_constant_params: residual " + std::to_string(best.residual) +
                         " above threshold"),
      best_(std::move(best)) {}

}  // namespace hybrur
