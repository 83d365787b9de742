#include "hybrur/networks.hpp"

#include <algorithm>
#include <sstream>

#include "hybrur/errors.hpp"

namespace hybrur {

namespace nn = torch::nn;

namespace {

constexpr double kTransmissionEps = 1e-6;

class ResidualBlockImpl : public nn::Module {
 public:
  explicit ResidualBlockImpl(int64_t channels) {
    body_ = register_module(
        "body", nn::Sequential(nn::ReflectionPad2d(1), nn::Conv2d(nn::Conv2dOptions(channels, channels, 3)),
                               nn::InstanceNorm2d(channels), nn::ReLU(), nn::ReflectionPad2d(1),
                               nn::Conv2d(nn::Conv2dOptions(channels, channels, 3)), nn::InstanceNorm2d(channels)));
  }
  torch::Tensor forward(const torch::Tensor& x) { return x + body_->forward(x); }

 private:
  nn::Sequential body_{nullptr};
};
TORCH_MODULE(ResidualBlock);

nn::Conv2d strided_conv(int64_t in, int64_t out) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(2).padding(1));
}

void check_input(const Generator& gen, const torch::Tensor& img, const char* op) {
  const auto s = gen->options().image_size;
  if (img.dim() != 4 || img.size(1) != 3 || img.size(2) != s || img.size(3) != s) {
    std::ostringstream msg;
    msg << op << ": expected [N,3," << s << "," << s << "], got " << img.sizes();
    throw ContractViolation(msg.str());
  }
}

torch::Tensor batched(const torch::Tensor& t) { return t.dim() == 3 ? t.unsqueeze(0) : t; }

}  // namespace

DepthNetImpl::DepthNetImpl(int64_t channels, int64_t residual_blocks) {
  nn::Sequential seq;
  seq->push_back(nn::ReflectionPad2d(3));
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(3, channels, 7)));
  seq->push_back(nn::InstanceNorm2d(channels));
  seq->push_back(nn::ReLU());
  int64_t c = channels;
  for (int i = 0; i < 2; ++i) {
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(c, 2 * c, 3).stride(2).padding(1)));
    seq->push_back(nn::InstanceNorm2d(2 * c));
    seq->push_back(nn::ReLU());
    c *= 2;
  }
  for (int64_t i = 0; i < residual_blocks; ++i) seq->push_back(ResidualBlock(c));
  for (int i = 0; i < 2; ++i) {
    seq->push_back(
        nn::ConvTranspose2d(nn::ConvTranspose2dOptions(c, c / 2, 3).stride(2).padding(1).output_padding(1)));
    seq->push_back(nn::InstanceNorm2d(c / 2));
    seq->push_back(nn::ReLU());
    c /= 2;
  }
  seq->push_back(nn::ReflectionPad2d(3));
  trunk_ = register_module("trunk", seq);
  head_ = register_module("head", nn::Conv2d(nn::Conv2dOptions(c, 1, 7)));
}

torch::Tensor DepthNetImpl::forward_raw(const torch::Tensor& x) { return head_->forward(trunk_->forward(x)); }

torch::Tensor DepthNetImpl::forward(const torch::Tensor& x) {
  return (3.0 + 3.0 * forward_raw(x)).clamp(0.0, kDepthMax);
}

CoeffEncoderImpl::CoeffEncoderImpl(int64_t in_channels, int64_t channels, int64_t blocks)
    : in_channels_(in_channels) {
  nn::Sequential seq;
  int64_t in = in_channels;
  int64_t out = channels;
  for (int64_t i = 0; i < blocks; ++i) {
    seq->push_back(strided_conv(in, out));
    seq->push_back(nn::BatchNorm2d(out));
    seq->push_back(nn::ReLU());
    in = out;
    out = std::min(out * 2, channels * 8);
  }
  seq->push_back(nn::AdaptiveAvgPool2d(nn::AdaptiveAvgPool2dOptions(1)));
  seq->push_back(nn::Flatten());
  trunk_ = register_module("trunk", seq);
  head_ = register_module("head", nn::Linear(in, 3));
}

torch::Tensor CoeffEncoderImpl::forward(const torch::Tensor& x) { return head_->forward(trunk_->forward(x)); }

GeneratorImpl::GeneratorImpl(GeneratorOptions opts) : opts_(opts) {
  if (opts_.image_size % 4 != 0) throw ContractViolation("generator: image_size must be divisible by 4");
  depth = register_module("depth", DepthNet(opts_.depth_channels, opts_.residual_blocks));
  const int64_t coeff_in = opts_.hyp1 ? 4 : 3;
  attenuation = register_module("attenuation", CoeffEncoder(coeff_in, opts_.encoder_channels, opts_.encoder_blocks));
  backscatter = register_module("backscatter", CoeffEncoder(coeff_in, opts_.encoder_channels, opts_.encoder_blocks));
  veiling = register_module("veiling", CoeffEncoder(3, opts_.encoder_channels, opts_.encoder_blocks));
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorOptions opts) : opts_(opts) {
  for (int64_t s = 0; s < opts_.scales; ++s) {
    nn::Sequential seq;
    int64_t in = 3;
    int64_t out = opts_.channels;
    for (int64_t i = 0; i < opts_.blocks; ++i) {
      seq->push_back(strided_conv(in, out));
      seq->push_back(nn::BatchNorm2d(out));
      seq->push_back(nn::ReLU());
      in = out;
      out *= 2;
    }
    seq->push_back(nn::Conv2d(nn::Conv2dOptions(in, 1, 3).padding(1)));
    branches_.push_back(register_module("scale" + std::to_string(s), seq));
  }
}

std::vector<torch::Tensor> DiscriminatorImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> scores;
  auto input = batched(x);
  for (std::size_t s = 0; s < branches_.size(); ++s) {
    if (s > 0) input = torch::avg_pool2d(input, 2);
    scores.push_back(branches_[s]->forward(input));
  }
  return scores;
}

void init_weights(nn::Module& module, double std) {
  torch::NoGradGuard no_grad;
  for (auto& m : module.modules(/*include_self=*/true)) {
    if (auto* conv = m->as<nn::Conv2d>()) {
      nn::init::normal_(conv->weight, 0.0, std);
      if (conv->bias.defined()) nn::init::zeros_(conv->bias);
    } else if (auto* deconv = m->as<nn::ConvTranspose2d>()) {
      nn::init::normal_(deconv->weight, 0.0, std);
      if (deconv->bias.defined()) nn::init::zeros_(deconv->bias);
    } else if (auto* lin = m->as<nn::Linear>()) {
      nn::init::normal_(lin->weight, 0.0, std);
      if (lin->bias.defined()) nn::init::zeros_(lin->bias);
    } else if (auto* bn = m->as<nn::BatchNorm2d>()) {
      nn::init::normal_(bn->weight, 1.0, std);
      nn::init::zeros_(bn->bias);
    }
  }
}

std::vector<std::string> Decomposition::violations() const {
  std::vector<std::string> out;
  auto z = depth.detach();
  if (!torch::isfinite(z).all().item<bool>()) out.emplace_back("depth has non-finite values");
  if (z.min().item<double>() < 0.0 || z.max().item<double>() > kDepthMax) out.emplace_back("depth outside [0,6]");
  auto open = [&](const torch::Tensor& t, const char* name) {
    auto d = t.detach();
    if (!(d > 0.0).all().item<bool>() || !(d < 1.0).all().item<bool>())
      out.push_back(std::string(name) + " outside (0,1)");
  };
  open(params.t_d, "t_D");
  open(params.t_b, "t_B");
  auto b = params.b_inf.detach();
  if (!(b >= kVeilingMin).all().item<bool>() || !(b <= kVeilingMax).all().item<bool>())
    out.emplace_back("B_inf outside [0.6,1]");
  return out;
}

torch::Tensor depth_forward(Generator& gen, const torch::Tensor& img) {
  auto x = batched(img);
  check_input(gen, x, "depth_forward");
  return gen->depth->forward(x);
}

torch::Tensor coeff_forward(CoeffEncoder& encoder, const torch::Tensor& img, const torch::Tensor& depth,
                            bool use_depth) {
  auto x = batched(img);
  auto input = use_depth ? torch::cat({x, batched(depth) / kDepthMax}, 1) : x;
  if (input.size(1) != encoder->in_channels())
    throw ContractViolation("coeff_forward: encoder expects " + std::to_string(encoder->in_channels()) +
                            " input channels, got " + std::to_string(input.size(1)));
  return torch::sigmoid(encoder->forward(input)).clamp(kTransmissionEps, 1.0 - kTransmissionEps);
}

torch::Tensor veiling_forward(Generator& gen, const torch::Tensor& img) {
  return kVeilingMin + (kVeilingMax - kVeilingMin) * torch::sigmoid(gen->veiling->forward(batched(img)));
}

Decomposition decompose(Generator& gen, const torch::Tensor& img) {
  auto x = batched(img);
  Decomposition d;
  d.depth = depth_forward(gen, x);
  const bool hyp1 = gen->options().hyp1;
  d.params.t_d = coeff_forward(gen->attenuation, x, d.depth, hyp1);
  d.params.t_b = coeff_forward(gen->backscatter, x, d.depth, hyp1);
  d.params.b_inf = veiling_forward(gen, x);
  return d;
}

Generated generate_underwater(Generator& g, const torch::Tensor& terrestrial, const torch::Tensor& physics_input) {
  Generated out;
  out.decomposition = decompose(g, batched(terrestrial));
  out.fake = degrade(batched(physics_input), out.decomposition.depth, out.decomposition.params);
  return out;
}

Generated generate_terrestrial(Generator& f, const torch::Tensor& underwater, const torch::Tensor& physics_input) {
  Generated out;
  out.decomposition = decompose(f, batched(underwater));
  out.fake = restore(batched(physics_input), out.decomposition.depth, out.decomposition.params);
  return out;
}

Generated generate_underwater(Generator& g, const torch::Tensor& terrestrial) {
  return generate_underwater(g, terrestrial, terrestrial);
}

Generated generate_terrestrial(Generator& f, const torch::Tensor& underwater) {
  return generate_terrestrial(f, underwater, underwater);
}

std::vector<torch::Tensor> discriminate(Discriminator& d, const torch::Tensor& img) { return d->forward(img); }

}  // namespace hybrur
