#include "hybrur/dcp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "hybrur/errors.hpp"

namespace hybrur {

torch::Tensor dcp_map(const torch::Tensor& rgb) {
  const int64_t cdim = rgb.dim() - 3;
  if (cdim < 0 || rgb.size(cdim) != 3) throw ContractViolation("dcp_map: expected a 3-channel image");
  return std::get<0>(rgb.min(cdim, /*keepdim=*/true));
}

ImageGray dcp_map(const ImageRGB& img) { return ImageGray{dcp_map(img.data)}; }

int64_t dark_pixel_count(int64_t pixels, double fraction, int64_t cap) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ContractViolation("darkest_mask: fraction must be in (0,1]");
  if (cap <= 0) throw ContractViolation("darkest_mask: cap must be positive");
  // The relative slack keeps products such as 0.07 * 100 from rounding up to 8.
  const double exact = fraction * static_cast<double>(pixels);
  const auto k = static_cast<int64_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::min({std::max<int64_t>(k, 1), cap, pixels});
}

torch::Tensor darkest_mask(const torch::Tensor& dcp, double fraction, int64_t cap) {
  const bool single = dcp.dim() == 3;
  auto batch = (single ? dcp.unsqueeze(0) : dcp).detach().to(torch::kCPU, torch::kFloat64).contiguous();
  if (batch.dim() != 4 || batch.size(1) != 1) throw ContractViolation("darkest_mask: expected [1,H,W] or [N,1,H,W]");

  const int64_t n = batch.size(0);
  const int64_t pixels = batch.size(2) * batch.size(3);
  const int64_t k = dark_pixel_count(pixels, fraction, cap);
  auto mask = torch::zeros({n, 1, batch.size(2), batch.size(3)}, torch::kFloat32);

  std::vector<int64_t> order(static_cast<std::size_t>(pixels));
  for (int64_t b = 0; b < n; ++b) {
    const double* v = batch[b].data_ptr<double>();
    float* out = mask[b].data_ptr<float>();
    std::iota(order.begin(), order.end(), 0);
    auto darker = [v](int64_t lhs, int64_t rhs) { return v[lhs] < v[rhs] || (v[lhs] == v[rhs] && lhs < rhs); };
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end(), darker);
    for (int64_t i = 0; i < k; ++i) out[order[static_cast<std::size_t>(i)]] = 1.0F;
  }
  mask = mask.to(dcp.device(), dcp.scalar_type() == torch::kFloat64 ? torch::kFloat64 : torch::kFloat32);
  return single ? mask.squeeze(0) : mask;
}

BinaryMask darkest_mask(const ImageGray& dcp, double fraction, int64_t cap) {
  return BinaryMask{darkest_mask(dcp.data, fraction, cap)};
}

}  // namespace hybrur
