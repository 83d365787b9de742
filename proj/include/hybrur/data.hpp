#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "hybrur/image.hpp"
#include "hybrur/physics.hpp"

namespace hybrur {

struct UnpairedDataset {
  std::vector<std::filesystem::path> underwater_paths;
  std::vector<std::filesystem::path> terrestrial_paths;
  int image_size = 256;

  /// One directory per domain, any mix of PNG/JPEG.
  static UnpairedDataset from_dirs(const std::filesystem::path& underwater_dir,
                                   const std::filesystem::path& terrestrial_dir, int image_size);
};

struct Batch {
  torch::Tensor terrestrial;  // x, [n,3,S,S]
  torch::Tensor underwater;   // y, [n,3,S,S]
  std::vector<std::size_t> terrestrial_index;
  std::vector<std::size_t> underwater_index;
};

/// Draws unpaired batches without replacement within an epoch. Each domain
/// has its own permutation, derived from (seed, epoch) only, so resuming at
/// an epoch boundary reproduces the same order.
class BatchSampler {
 public:
  BatchSampler(const UnpairedDataset& ds, int batch_size, uint64_t seed);

  void start_epoch(int64_t epoch);
  /// Next batch, or nullopt at epoch end (fewer than batch_size readable
  /// images remain). Unreadable files are skipped with a warning.
  std::optional<Batch> next_batch();
  /// Skip k batches of the current epoch (used when resuming mid-epoch).
  void skip(int64_t k);

  /// Full batches per epoch when every file is readable.
  int64_t batches_per_epoch() const;
  const std::vector<std::size_t>& terrestrial_order() const { return order_x_; }
  const std::vector<std::size_t>& underwater_order() const { return order_y_; }

 private:
  std::optional<torch::Tensor> take(const std::vector<std::filesystem::path>& paths,
                                    const std::vector<std::size_t>& order, std::size_t& cursor,
                                    std::vector<std::size_t>& taken);

  const UnpairedDataset& ds_;
  int batch_size_;
  uint64_t seed_;
  std::vector<std::size_t> order_x_, order_y_;
  std::size_t cursor_x_ = 0, cursor_y_ = 0;
};

/// Shuffled indices 0..n-1 for one domain and epoch.
std::vector<std::size_t> epoch_permutation(std::size_t n, uint64_t seed, int64_t epoch, uint64_t domain);

struct SyntheticSample {
  ImageRGB clean;
  DepthMap depth;
  DegradationParams params;
  ImageRGB degraded;
};

/// Draws t_D, t_B uniformly in [0.2, 0.99] and B_inf in [0.6, 1].
DegradationParams sample_params(std::mt19937_64& rng);

/// Depth maps used by synthetic data and the degrade command.
DepthMap constant_depth(double z, int64_t height, int64_t width);
/// Linear ramp from `far` metres at the top row to 0 at the bottom row.
DepthMap gradient_depth(int64_t height, int64_t width, double far = kDepthMax);

SyntheticSample make_synthetic(const ImageRGB& clean, const DepthMap& depth, std::mt19937_64& rng);
SyntheticSample make_synthetic(const ImageRGB& clean, double constant_z, std::mt19937_64& rng);

}  // namespace hybrur
