#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "hybrur/errors.hpp"

int main(int argc, char** argv) {
  using namespace hybrur;
  CLI::App app{"Hybrid physical-neural underwater image restoration"};
  app.require_subcommand(1);

  cli::TrainArgs train;
  auto* sc_train = app.add_subcommand("train", "Train the restoration networks");
  sc_train->add_option("--config", train.config, "JSON training configuration")->required()->check(CLI::ExistingFile);
  sc_train->add_option("--resume", train.resume, "Checkpoint to continue from");
  sc_train->add_option("--max-iterations", train.max_iterations, "Stop after this many steps in total");

  cli::RestoreArgs restore;
  auto* sc_restore = app.add_subcommand("restore", "Restore a directory of underwater images");
  sc_restore->add_option("--checkpoint", restore.checkpoint)->required();
  sc_restore->add_option("--input", restore.input)->required()->check(CLI::ExistingDirectory);
  sc_restore->add_option("--output", restore.output)->required();
  sc_restore->add_flag("--emit-depth", restore.emit_depth, "Also write depth maps (z / 6)");
  sc_restore->add_flag("--emit-backscatter", restore.emit_backscatter, "Also write backscatter estimates");

  cli::DegradeArgs degrade;
  auto* sc_degrade = app.add_subcommand("degrade", "Synthesize underwater images with known parameters");
  sc_degrade->add_option("--input", degrade.input)->required()->check(CLI::ExistingDirectory);
  sc_degrade->add_option("--output", degrade.output)->required();
  auto* params_opt = sc_degrade->add_option("--params", degrade.params, "JSON parameter file")
                         ->check(CLI::ExistingFile);
  auto* sample_opt = sc_degrade->add_option("--sample", degrade.sample_seed, "Draw parameters with this seed");
  params_opt->excludes(sample_opt);
  sc_degrade->add_option("--depth", degrade.depth, "constant:<z> | gradient[:<far>] | file:<png>")
      ->capture_default_str();
  sc_degrade->add_option("--size", degrade.size, "Working resolution, 0 = native")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  cli::EvalArgs eval;
  auto* sc_eval = app.add_subcommand("eval", "Image quality metrics as CSV");
  sc_eval->add_option("--input", eval.input)->required()->check(CLI::ExistingDirectory);
  sc_eval->add_option("--restored", eval.restored, "Restorations paired with --input by filename stem")
      ->check(CLI::ExistingDirectory);
  sc_eval->add_option("--report", eval.report)->required();

  cli::MaskArgs mask;
  auto* sc_mask = app.add_subcommand("mask", "Dark-channel map and darkest-pixel mask");
  sc_mask->add_option("--input", mask.input)->required()->check(CLI::ExistingFile);
  sc_mask->add_option("--output-prefix", mask.output_prefix)->required();
  sc_mask->add_option("--fraction", mask.fraction)
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0) & CLI::PositiveNumber);
  sc_mask->add_option("--cap", mask.cap)->capture_default_str()->check(CLI::PositiveNumber);

  cli::GridArgs grid;
  auto* sc_grid = app.add_subcommand("grid", "Comparison grid, one row per directory");
  sc_grid->add_option("--output", grid.output)->required();
  sc_grid->add_option("--tile", grid.tile)->capture_default_str()->check(CLI::PositiveNumber);
  sc_grid->add_option("dirs", grid.dirs)->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sc_train) return cli::cmd_train(train);
    if (*sc_restore) return cli::cmd_restore(restore);
    if (*sc_degrade) return cli::cmd_degrade(degrade);
    if (*sc_eval) return cli::cmd_eval(eval);
    if (*sc_mask) return cli::cmd_mask(mask);
    if (*sc_grid) return cli::cmd_grid(grid);
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
