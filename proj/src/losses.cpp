#include "hybrur/losses.hpp"

#include <cmath>

#include "hybrur/errors.hpp"

namespace hybrur {

bool LossReport::finite() const {
  return std::isfinite(l_g) && std::isfinite(l_d) && std::isfinite(l_cycle) && std::isfinite(l_perc) &&
         std::isfinite(l_bhat) && std::isfinite(total);
}

torch::Tensor adversarial_generator(const std::vector<torch::Tensor>& fake_scores) {
  if (fake_scores.empty()) throw ContractViolation("adversarial_generator: no score maps");
  torch::Tensor acc;
  for (const auto& s : fake_scores) {
    auto term = (s - 1.0).pow(2).mean();
    acc = acc.defined() ? acc + term : term;
  }
  return acc / static_cast<double>(fake_scores.size());
}

torch::Tensor adversarial_discriminator(const std::vector<torch::Tensor>& real_scores,
                                        const std::vector<torch::Tensor>& fake_scores) {
  if (real_scores.empty() || real_scores.size() != fake_scores.size())
    throw ContractViolation("adversarial_discriminator: score lists must be nonempty and of equal length");
  torch::Tensor acc;
  for (std::size_t i = 0; i < real_scores.size(); ++i) {
    auto term = (real_scores[i] - 1.0).pow(2).mean() + fake_scores[i].pow(2).mean();
    acc = acc.defined() ? acc + term : term;
  }
  return acc / static_cast<double>(real_scores.size());
}

torch::Tensor cycle_consistency(const torch::Tensor& x, const torch::Tensor& x_rec, const torch::Tensor& y,
                                const torch::Tensor& y_rec) {
  if (x.sizes() != x_rec.sizes() || y.sizes() != y_rec.sizes())
    throw ContractViolation("cycle_consistency: reconstruction shapes differ from inputs");
  return (x_rec - x).abs().mean() + (y_rec - y).abs().mean();
}

torch::Tensor perceptual(const torch::Tensor& orig, const torch::Tensor& recov, PerceptualEncoder& encoder) {
  if (orig.sizes() != recov.sizes()) throw ContractViolation("perceptual: image shapes differ");
  torch::Tensor target;
  {
    torch::NoGradGuard no_grad;
    target = encoder->forward(orig.detach());
  }
  auto feat = encoder->forward(recov);
  return (feat - target).pow(2).sum(1).mean();
}

torch::Tensor backscatter_fidelity(const torch::Tensor& observed, const Decomposition& d, const torch::Tensor& mask) {
  auto img = observed.dim() == 3 ? observed.unsqueeze(0) : observed;
  auto m = (mask.dim() == 3 ? mask.unsqueeze(0) : mask).detach().to(img.scalar_type());
  if (m.size(0) != img.size(0) || m.size(1) != 1 || m.size(2) != img.size(2) || m.size(3) != img.size(3))
    throw ContractViolation("backscatter_fidelity: mask shape does not match image");
  auto selected = m.sum();
  if (selected.item<double>() <= 0.0) throw ContractViolation("backscatter_fidelity: empty mask");
  auto estimate = estimate_backscatter(d.depth, d.params);
  return ((img - estimate).abs() * m).sum() / (selected * 3.0);
}

double total(const LossReport& c, const LossWeights& w) {
  return w.lambda_g * c.l_g + w.lambda_c * c.l_cycle + w.lambda_p * c.l_perc + w.lambda_B * c.l_bhat;
}

torch::Tensor total(const torch::Tensor& l_g, const torch::Tensor& l_cycle, const torch::Tensor& l_perc,
                    const torch::Tensor& l_bhat, const LossWeights& w) {
  return w.lambda_g * l_g + w.lambda_c * l_cycle + w.lambda_p * l_perc + w.lambda_B * l_bhat;
}

}  // namespace hybrur
