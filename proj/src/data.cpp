#include "hybrur/data.hpp"

#include <algorithm>
#include <iostream>
#include <numeric>

#include "hybrur/errors.hpp"

namespace hybrur {

UnpairedDataset UnpairedDataset::from_dirs(const std::filesystem::path& underwater_dir,
                                           const std::filesystem::path& terrestrial_dir, int image_size) {
  UnpairedDataset ds;
  ds.underwater_paths = list_images(underwater_dir);
  ds.terrestrial_paths = list_images(terrestrial_dir);
  ds.image_size = image_size;
  if (ds.underwater_paths.empty()) throw IoError(underwater_dir.string(), "no images found");
  if (ds.terrestrial_paths.empty()) throw IoError(terrestrial_dir.string(), "no images found");
  return ds;
}

std::vector<std::size_t> epoch_permutation(std::size_t n, uint64_t seed, int64_t epoch, uint64_t domain) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32), static_cast<uint32_t>(epoch),
                    static_cast<uint32_t>(domain)};
  std::mt19937_64 rng(seq);
  // Fisher-Yates with our own index draws: std::shuffle's use of the engine
  // is implementation-defined.
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

BatchSampler::BatchSampler(const UnpairedDataset& ds, int batch_size, uint64_t seed)
    : ds_(ds), batch_size_(batch_size), seed_(seed) {
  if (batch_size < 1) throw ContractViolation("BatchSampler: batch size must be >= 1");
  start_epoch(0);
}

void BatchSampler::start_epoch(int64_t epoch) {
  order_x_ = epoch_permutation(ds_.terrestrial_paths.size(), seed_, epoch, 0);
  order_y_ = epoch_permutation(ds_.underwater_paths.size(), seed_, epoch, 1);
  cursor_x_ = cursor_y_ = 0;
}

int64_t BatchSampler::batches_per_epoch() const {
  return static_cast<int64_t>(std::min(ds_.terrestrial_paths.size(), ds_.underwater_paths.size())) / batch_size_;
}

std::optional<torch::Tensor> BatchSampler::take(const std::vector<std::filesystem::path>& paths,
                                                const std::vector<std::size_t>& order, std::size_t& cursor,
                                                std::vector<std::size_t>& taken) {
  std::vector<torch::Tensor> images;
  while (static_cast<int>(images.size()) < batch_size_) {
    if (cursor >= order.size()) return std::nullopt;
    const std::size_t idx = order[cursor++];
    try {
      images.push_back(load_image(paths[idx], ds_.image_size).data);
      taken.push_back(idx);
    } catch (const IoError& e) {
      std::cerr << "warning: skipping unreadable image " << e.what() << "\n";
    }
  }
  return torch::stack(images);
}

std::optional<Batch> BatchSampler::next_batch() {
  Batch b;
  auto x = take(ds_.terrestrial_paths, order_x_, cursor_x_, b.terrestrial_index);
  if (!x) return std::nullopt;
  auto y = take(ds_.underwater_paths, order_y_, cursor_y_, b.underwater_index);
  if (!y) return std::nullopt;
  b.terrestrial = *x;
  b.underwater = *y;
  return b;
}

void BatchSampler::skip(int64_t k) {
  const auto n = static_cast<std::size_t>(k * batch_size_);
  cursor_x_ = std::min(order_x_.size(), cursor_x_ + n);
  cursor_y_ = std::min(order_y_.size(), cursor_y_ + n);
}

DegradationParams sample_params(std::mt19937_64& rng) {
  // Explicit affine maps of 53-bit uniforms keep draws identical across
  // standard library implementations.
  auto uniform = [&rng](double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  };
  DegradationParams p;
  for (std::size_t c = 0; c < 3; ++c) p.t_d[c] = uniform(0.2, 0.99);
  for (std::size_t c = 0; c < 3; ++c) p.t_b[c] = uniform(0.2, 0.99);
  for (std::size_t c = 0; c < 3; ++c) p.b_inf[c] = uniform(kVeilingMin, kVeilingMax);
  return p;
}

DepthMap constant_depth(double z, int64_t height, int64_t width) {
  return DepthMap{torch::full({1, height, width}, z, torch::kFloat32)};
}

DepthMap gradient_depth(int64_t height, int64_t width, double far) {
  auto rows = torch::linspace(far, 0.0, height, torch::kFloat64).to(torch::kFloat32);
  return DepthMap{rows.view({1, height, 1}).expand({1, height, width}).contiguous()};
}

SyntheticSample make_synthetic(const ImageRGB& clean, const DepthMap& depth, std::mt19937_64& rng) {
  SyntheticSample s;
  s.clean = clean;
  s.depth = depth;
  s.params = sample_params(rng);
  s.degraded = degrade(clean, depth, s.params);
  return s;
}

SyntheticSample make_synthetic(const ImageRGB& clean, double constant_z, std::mt19937_64& rng) {
  return make_synthetic(clean, constant_depth(constant_z, clean.height(), clean.width()), rng);
}

}  // namespace hybrur
