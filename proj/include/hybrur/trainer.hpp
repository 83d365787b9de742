#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "hybrur/config.hpp"
#include "hybrur/data.hpp"
#include "hybrur/losses.hpp"
#include "hybrur/networks.hpp"
#include "hybrur/perceptual.hpp"

namespace hybrur {

/// History of generated images shown to a discriminator. With capacity 0 the
/// current batch passes straight through.
class ImagePool {
 public:
  explicit ImagePool(int64_t capacity = 50) : capacity_(capacity) {}

  /// Each image either passes through or, once the pool is full, is swapped
  /// with a stored one with probability 1/2.
  torch::Tensor query(const torch::Tensor& batch, std::mt19937_64& rng);

  int64_t capacity() const { return capacity_; }
  const std::vector<torch::Tensor>& images() const { return images_; }
  void set_images(std::vector<torch::Tensor> images) { images_ = std::move(images); }

 private:
  int64_t capacity_;
  std::vector<torch::Tensor> images_;
};

/// Sub-module order used by gradient diagnostics.
inline constexpr std::array<const char*, 4> kSubModules = {"depth", "attenuation", "backscatter", "veiling"};

struct StepResult {
  LossReport report;
  /// L2 norm of the generator-loss gradient per sub-module, in kSubModules order.
  std::array<double, 4> grad_norm_g{};
  std::array<double, 4> grad_norm_f{};
  /// Range violations found in any decomposition produced during the step.
  std::vector<std::string> violations;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Everything a checkpoint captures: weights, optimizer moments, counters,
/// the fake-image pools and the sampling RNG.
class TrainState {
 public:
  explicit TrainState(TrainConfig cfg);
  TrainState(const TrainState&) = delete;
  TrainState& operator=(const TrainState&) = delete;

  TrainConfig cfg;
  int64_t epoch = 0;            // next epoch to run
  int64_t iteration = 0;        // completed training steps
  int64_t epoch_iteration = 0;  // completed steps inside `epoch`

  Generator G{nullptr};  // terrestrial -> underwater
  Generator F{nullptr};  // underwater -> terrestrial
  Discriminator D_underwater{nullptr};
  Discriminator D_terrestrial{nullptr};
  PerceptualEncoder perceptual{nullptr};

  std::unique_ptr<torch::optim::Adam> opt_generators;  // groups: depth, coefficients
  std::unique_ptr<torch::optim::Adam> opt_d_underwater;
  std::unique_ptr<torch::optim::Adam> opt_d_terrestrial;

  ImagePool pool_underwater;
  ImagePool pool_terrestrial;
  std::mt19937_64 rng;

  void set_learning_rates(double depth, double coeff, double disc);
  std::array<double, 3> learning_rates() const;
};

/// base for epoch < decay_start, then linear to zero at total_epochs.
double lr_at(int64_t epoch, const TrainConfig& cfg, double base);

/// One generator update on G and F followed by one update per discriminator.
/// Throws TrainingDiverged on a non-finite loss.
StepResult training_step(TrainState& state, const torch::Tensor& x_terrestrial, const torch::Tensor& y_underwater);

struct RunOptions {
  /// Stop after this many steps in total (for tests); negative = no limit.
  int64_t max_iterations = -1;
  bool verbose = true;
};

/// Runs the remaining epochs. Writes checkpoint_epoch_NNNN.pt and latest.pt
/// after every epoch, a CSV log row per iteration and preview grids.
/// Returns the path of the final checkpoint.
std::filesystem::path run(TrainState& state, const UnpairedDataset& ds, const std::filesystem::path& out_dir,
                          const RunOptions& opts = {});

/// CSV header of the training log.
std::string log_header();

void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
/// Rebuilds the state from the embedded config snapshot.
std::unique_ptr<TrainState> load_checkpoint(const std::filesystem::path& path);

}  // namespace hybrur
