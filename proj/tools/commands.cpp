#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "hybrur/config.hpp"
#include "hybrur/data.hpp"
#include "hybrur/dcp.hpp"
#include "hybrur/errors.hpp"
#include "hybrur/image.hpp"
#include "hybrur/metrics.hpp"
#include "hybrur/params_io.hpp"
#include "hybrur/physics.hpp"
#include "hybrur/trainer.hpp"

namespace hybrur::cli {

namespace fs = std::filesystem;

namespace {

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

// Regular files of a directory, sorted; non-images are reported and dropped.
std::vector<fs::path> images_in(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (is_image_file(e.path()))
      out.push_back(e.path());
    else
      warn("skipping non-image file " + e.path().string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw UsageError("cannot parse " + what + " '" + text + "'");
  }
}

DepthMap make_depth(const std::string& spec, int64_t h, int64_t w) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "constant") {
    if (arg.empty()) throw UsageError("--depth constant needs a value, e.g. constant:3");
    return constant_depth(parse_number(arg, "depth"), h, w);
  }
  if (kind == "gradient") return gradient_depth(h, w, arg.empty() ? kDepthMax : parse_number(arg, "depth"));
  if (kind == "file") {
    auto img = load_image_native(arg).data.narrow(0, 0, 1);
    if (img.size(1) != h || img.size(2) != w) img = resize_bilinear(img, h, w);
    return DepthMap{img * kDepthMax};
  }
  throw UsageError("unknown depth spec '" + spec + "' (constant:<z>, gradient[:<far>], file:<png>)");
}

std::string format_row(const std::vector<double>& values) {
  std::ostringstream os;
  os << std::setprecision(10);
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
  return os.str();
}

}  // namespace

int cmd_train(const TrainArgs& args) {
  TrainConfig cfg = load_config(args.config);
  cfg.validate();
  for (const auto& dir : {cfg.underwater_dir, cfg.terrestrial_dir})
    if (!fs::is_directory(dir)) throw UsageError("data directory '" + dir + "' does not exist");

  std::unique_ptr<TrainState> state;
  if (!args.resume.empty()) {
    if (!fs::exists(args.resume)) throw UsageError("checkpoint " + args.resume.string() + " does not exist");
    state = load_checkpoint(args.resume);
    // Data locations and schedule come from the config file; the networks
    // and optimiser settings from the checkpoint.
    state->cfg.underwater_dir = cfg.underwater_dir;
    state->cfg.terrestrial_dir = cfg.terrestrial_dir;
    state->cfg.out_dir = cfg.out_dir;
    state->cfg.total_epochs = cfg.total_epochs;
    state->cfg.decay_start_epoch = cfg.decay_start_epoch;
    state->cfg.sample_every = cfg.sample_every;
    std::cout << "resuming at epoch " << state->epoch << ", iteration " << state->iteration << std::endl;
  } else {
    state = std::make_unique<TrainState>(cfg);
  }
  const auto& c = state->cfg;
  auto ds = UnpairedDataset::from_dirs(c.underwater_dir, c.terrestrial_dir, static_cast<int>(c.image_size));
  if (static_cast<int64_t>(std::min(ds.underwater_paths.size(), ds.terrestrial_paths.size())) < c.batch_size)
    throw UsageError("each data directory needs at least batch_size images");
  RunOptions opts;
  opts.max_iterations = args.max_iterations;
  const auto latest = run(*state, ds, c.out_dir, opts);
  std::cout << "final checkpoint " << latest.string() << std::endl;
  return 0;
}

int cmd_restore(const RestoreArgs& args) {
  if (!fs::exists(args.checkpoint)) throw UsageError("checkpoint " + args.checkpoint.string() + " does not exist");
  auto state = load_checkpoint(args.checkpoint);
  auto& F = state->F;
  F->eval();
  const int64_t size = state->cfg.image_size;
  fs::create_directories(args.output);

  torch::NoGradGuard no_grad;
  int failures = 0;
  int done = 0;
  double network_seconds = 0.0;
  for (const auto& path : images_in(args.input)) {
    try {
      auto img = load_image_native(path);
      const auto t0 = std::chrono::steady_clock::now();
      auto x = resize_bilinear(img.data, size, size).unsqueeze(0);
      auto out = generate_terrestrial(F, x);
      network_seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      const auto h = img.height(), w = img.width();
      const auto stem = path.stem().string();
      save_image(args.output / (stem + ".png"), resize_bilinear(out.fake.image[0], h, w));
      if (args.emit_depth)
        save_image(args.output / (stem + "_depth.png"),
                   resize_bilinear(out.decomposition.depth[0] / kDepthMax, h, w));
      if (args.emit_backscatter) {
        auto bhat = estimate_backscatter(out.decomposition.depth, out.decomposition.params);
        save_image(args.output / (stem + "_backscatter.png"), resize_bilinear(bhat[0], h, w));
      }
      ++done;
    } catch (const std::exception& e) {
      ++failures;
      warn(path.string() + ": " + e.what());
    }
  }
  std::cout << "restored " << done << " images";
  if (done > 0) std::cout << " at " << std::fixed << std::setprecision(2) << done / network_seconds << " FPS";
  std::cout << (failures ? ", " + std::to_string(failures) + " failed" : "") << std::endl;
  return 0;
}

int cmd_degrade(const DegradeArgs& args) {
  if (args.params.empty() == !args.sample_seed) throw UsageError("give exactly one of --params or --sample");
  std::optional<DegradationParams> fixed;
  if (!args.params.empty()) {
    fixed = load_params(args.params);
    const auto bad = fixed->violations();
    if (!bad.empty()) {
      std::ostringstream os;
      os << "parameters out of range:";
      for (const auto& v : bad) os << "\n  " << v;
      throw UsageError(os.str());
    }
  }
  std::mt19937_64 rng(args.sample_seed.value_or(0));
  fs::create_directories(args.output);

  for (const auto& path : images_in(args.input)) {
    const auto clean = args.size > 0 ? load_image(path, args.size) : load_image_native(path);
    const auto depth = make_depth(args.depth, clean.height(), clean.width());
    const auto params = fixed ? *fixed : sample_params(rng);
    const auto out = degrade(clean, depth, params);

    const auto name = path.stem().string() + ".png";
    save_image(args.output / name, out.data);
    SyntheticManifest m;
    m.image = name;
    m.source = fs::absolute(path).string();
    m.depth = args.depth;
    m.params = params;
    m.image_size = args.size;
    std::ofstream(args.output / (path.stem().string() + ".json")) << manifest_to_json(m) << "\n";
  }
  return 0;
}

int cmd_eval(const EvalArgs& args) {
  const bool paired = !args.restored.empty();
  std::map<std::string, fs::path> restored;
  if (paired)
    for (const auto& p : images_in(args.restored)) restored[p.stem().string()] = p;

  std::vector<std::string> header = {"sigma_c", "con_l", "mu_s", "uciqe", "d_o", "d_a", "d_b", "a_l",
                                     "u", "contrast", "laplacian_var", "sift", "harris"};
  if (paired) {
    header.push_back("ssim");
    header.push_back("sift_match");
  }

  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
  std::set<std::string> used;
  for (const auto& path : images_in(args.input)) {
    const auto stem = path.stem().string();
    fs::path target = path;
    if (paired) {
      auto it = restored.find(stem);
      if (it == restored.end()) {
        warn("no restoration for " + path.filename().string() + ", skipped");
        continue;
      }
      target = it->second;
      used.insert(stem);
    }
    try {
      auto img = load_image_native(target);
      const auto uq = uciqe(img);
      const auto lu = lab_u_index(img);
      const auto fc = feature_counts(img);
      std::vector<double> row = {uq.sigma_c, uq.con_l, uq.mu_s, uq.uciqe, lu.d_o, lu.d_a, lu.d_b,
                                 lu.a_l, lu.u, rms_contrast(img), laplacian_variance(img),
                                 static_cast<double>(fc.sift), static_cast<double>(fc.harris)};
      if (paired) {
        auto raw = load_image_native(path);
        if (raw.height() != img.height() || raw.width() != img.width())
          img = ImageRGB{resize_bilinear(img.data, raw.height(), raw.width())};
        row.push_back(ssim(raw, img));
        row.push_back(static_cast<double>(sift_match_count(raw, img)));
      }
      names.push_back(path.filename().string());
      rows.push_back(std::move(row));
    } catch (const std::exception& e) {
      warn(path.string() + ": " + e.what());
    }
  }
  for (const auto& [stem, p] : restored)
    if (!used.count(stem)) warn("no input for " + p.filename().string() + ", skipped");

  if (args.report.has_parent_path()) fs::create_directories(args.report.parent_path());
  std::ofstream csv(args.report);
  if (!csv) throw IoError(args.report.string(), "cannot write report");
  csv << "image";
  for (const auto& h : header) csv << "," << h;
  csv << "\n";
  std::vector<double> sums(header.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv << names[i] << "," << format_row(rows[i]) << "\n";
    for (std::size_t j = 0; j < sums.size(); ++j) sums[j] += rows[i][j];
  }
  if (!rows.empty()) {
    for (auto& s : sums) s /= static_cast<double>(rows.size());
    csv << "mean," << format_row(sums) << "\n";
  }
  std::cout << "evaluated " << rows.size() << " images" << std::endl;
  return 0;
}

int cmd_mask(const MaskArgs& args) {
  const auto img = load_image_native(args.input);
  const auto dark = dcp_map(img);
  const auto mask = darkest_mask(dark, args.fraction, args.cap);
  save_image(args.output_prefix + "_dcp.png", dark.data);
  save_image(args.output_prefix + "_mask.png", mask.m);
  save_image(args.output_prefix + "_masked.png", img.data * mask.m);
  std::cout << "selected " << mask.count() << " of " << img.height() * img.width() << " pixels" << std::endl;
  return 0;
}

int cmd_grid(const GridArgs& args) {
  std::vector<std::set<std::string>> names;
  std::set<std::string> all;
  for (const auto& dir : args.dirs) {
    std::set<std::string> s;
    for (const auto& p : images_in(dir)) s.insert(p.filename().string());
    all.insert(s.begin(), s.end());
    names.push_back(std::move(s));
  }
  std::ostringstream diff;
  for (std::size_t i = 0; i < args.dirs.size(); ++i)
    for (const auto& n : all)
      if (!names[i].count(n)) diff << "\n  " << args.dirs[i].string() << " lacks " << n;
  if (!diff.str().empty()) throw UsageError("directories hold different file names:" + diff.str());
  if (all.empty()) throw UsageError("no images to tile");

  std::vector<std::vector<torch::Tensor>> rows;
  for (const auto& dir : args.dirs) {
    std::vector<torch::Tensor> row;
    for (const auto& n : all) row.push_back(load_image(dir / n, args.tile).data);
    rows.push_back(std::move(row));
  }
  save_image(args.output, compose_grid(rows, args.tile));
  return 0;
}

}  // namespace hybrur::cli
