#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hybrur::cli {

/// Bad flags or inputs the user can fix; maps to exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainArgs {
  std::filesystem::path config;
  std::filesystem::path resume;
  int64_t max_iterations = -1;
};

struct RestoreArgs {
  std::filesystem::path checkpoint;
  std::filesystem::path input;
  std::filesystem::path output;
  bool emit_depth = false;
  bool emit_backscatter = false;
};

struct DegradeArgs {
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path params;
  std::optional<uint64_t> sample_seed;
  std::string depth = "constant:3";
  int size = 256;  // 0 keeps the native resolution
};

struct EvalArgs {
  std::filesystem::path input;
  std::filesystem::path restored;
  std::filesystem::path report;
};

struct MaskArgs {
  std::filesystem::path input;
  std::string output_prefix;
  double fraction = 0.01;
  int64_t cap = 10000;
};

struct GridArgs {
  std::filesystem::path output;
  std::vector<std::filesystem::path> dirs;
  int tile = 256;
};

// Each returns the process exit status; failures are thrown.
int cmd_train(const TrainArgs& args);
int cmd_restore(const RestoreArgs& args);
int cmd_degrade(const DegradeArgs& args);
int cmd_eval(const EvalArgs& args);
int cmd_mask(const MaskArgs& args);
int cmd_grid(const GridArgs& args);

}  // namespace hybrur::cli
