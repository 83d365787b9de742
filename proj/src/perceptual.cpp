#include "hybrur/perceptual.hpp"

#include <cmath>

#include "hybrur/errors.hpp"

namespace hybrur {

namespace nn = torch::nn;

PerceptualEncoderImpl::PerceptualEncoderImpl(int64_t width) : width_(width) {
  // Layer indices follow torchvision's vgg16().features so that exported
  // state dicts load by name ("features.0.weight", ...).
  nn::Sequential seq;
  int64_t in = 3;
  const int64_t widths[3] = {width, 2 * width, 4 * width};
  const int convs[3] = {2, 2, 3};
  for (int stage = 0; stage < 3; ++stage) {
    if (stage > 0) seq->push_back(nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2)));
    for (int i = 0; i < convs[stage]; ++i) {
      seq->push_back(nn::Conv2d(nn::Conv2dOptions(in, widths[stage], 3).padding(1)));
      seq->push_back(nn::ReLU());
      in = widths[stage];
    }
  }
  features_ = register_module("features", seq);
}

torch::Tensor PerceptualEncoderImpl::forward(const torch::Tensor& rgb) {
  auto opts = rgb.options();
  auto mean = torch::tensor({0.485, 0.456, 0.406}, opts).view({1, 3, 1, 1});
  auto std = torch::tensor({0.229, 0.224, 0.225}, opts).view({1, 3, 1, 1});
  auto x = rgb.dim() == 3 ? rgb.unsqueeze(0) : rgb;
  return features_->forward((x - mean) / std);
}

PerceptualEncoder make_perceptual_encoder(const PerceptualSpec& spec) {
  PerceptualEncoder enc(spec.width);
  if (spec.kind == "vgg16") {
    if (spec.width != 64) throw ConfigError("perceptual_width", "pretrained VGG16 requires perceptual_width = 64");
    if (spec.weights.empty() || !std::filesystem::exists(spec.weights))
      throw ConfigError("perceptual_weights",
                        "perceptual encoder weights not found: '" + spec.weights.string() + "'");
    try {
      torch::serialize::InputArchive archive;
      archive.load_from(spec.weights.string());
      enc->load(archive);
    } catch (const c10::Error& e) {
      throw ConfigError("perceptual_weights", "cannot load perceptual encoder weights from '" +
                                                  spec.weights.string() + "': " + e.what_without_backtrace());
    }
  } else if (spec.kind == "random") {
    torch::NoGradGuard no_grad;
    auto gen = at::make_generator<at::CPUGeneratorImpl>(spec.seed);
    for (auto& m : enc->modules(false)) {
      if (auto* conv = m->as<nn::Conv2d>()) {
        const double fan_in = static_cast<double>(conv->weight.size(1) * conv->weight.size(2) * conv->weight.size(3));
        conv->weight.normal_(0.0, std::sqrt(2.0 / fan_in), gen);
        conv->bias.zero_();
      }
    }
  } else {
    throw ConfigError("perceptual_encoder", "unknown perceptual encoder '" + spec.kind + "' (vgg16|random)");
  }
  for (auto& p : enc->parameters()) p.set_requires_grad(false);
  enc->eval();
  return enc;
}

}  // namespace hybrur
