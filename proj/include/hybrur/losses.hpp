#pragma once

#include <vector>

#include <torch/torch.h>

#include "hybrur/networks.hpp"
#include "hybrur/perceptual.hpp"

namespace hybrur {

struct LossWeights {
  double lambda_g = 3.0;
  double lambda_c = 4.0;
  double lambda_p = 0.1;
  double lambda_B = 2.0;
};

/// Scalars reported per training iteration.
struct LossReport {
  double l_g = 0.0;
  double l_d = 0.0;
  double l_cycle = 0.0;
  double l_perc = 0.0;
  double l_bhat = 0.0;
  double total = 0.0;

  bool finite() const;
  bool operator==(const LossReport&) const = default;
};

// Each loss returns a 0-dim tensor that carries gradient when its inputs do.

/// LSGAN generator term: mean over scales of mean((score - 1)^2).
torch::Tensor adversarial_generator(const std::vector<torch::Tensor>& fake_scores);

/// LSGAN discriminator term: mean over scales of mean((real - 1)^2) + mean(fake^2).
torch::Tensor adversarial_discriminator(const std::vector<torch::Tensor>& real_scores,
                                        const std::vector<torch::Tensor>& fake_scores);

/// mean|x_rec - x| + mean|y_rec - y|.
torch::Tensor cycle_consistency(const torch::Tensor& x, const torch::Tensor& x_rec, const torch::Tensor& y,
                                const torch::Tensor& y_rec);

/// Squared feature distance summed over channels and averaged over the
/// feature map's spatial positions (and the batch). Positive by construction.
torch::Tensor perceptual(const torch::Tensor& orig, const torch::Tensor& recov, PerceptualEncoder& encoder);

/// Mean over masked pixels and channels of |I - B_inf (1 - t_b^z)|.
/// The mask is detached; throws ContractViolation when it is empty.
torch::Tensor backscatter_fidelity(const torch::Tensor& observed, const Decomposition& d, const torch::Tensor& mask);

/// lambda_g L_G + lambda_c L_cycle + lambda_p L_perc + lambda_B L_Bhat.
double total(const LossReport& components, const LossWeights& w);
torch::Tensor total(const torch::Tensor& l_g, const torch::Tensor& l_cycle, const torch::Tensor& l_perc,
                    const torch::Tensor& l_bhat, const LossWeights& w);

}  // namespace hybrur
