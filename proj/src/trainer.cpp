#include "hybrur/trainer.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "hybrur/dcp.hpp"
#include "hybrur/errors.hpp"

namespace hybrur {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::vector<torch::Tensor> coefficient_parameters(Generator& gen) {
  std::vector<torch::Tensor> out;
  for (auto* enc : {&gen->attenuation, &gen->backscatter, &gen->veiling})
    for (auto& p : (*enc)->parameters()) out.push_back(p);
  return out;
}

std::array<double, 4> grad_norms(Generator& gen) {
  std::array<double, 4> out{};
  torch::nn::Module* parts[4] = {gen->depth.get(), gen->attenuation.get(), gen->backscatter.get(),
                                 gen->veiling.get()};
  for (int i = 0; i < 4; ++i) {
    double sq = 0.0;
    for (const auto& p : parts[i]->parameters())
      if (p.grad().defined()) sq += p.grad().to(torch::kFloat64).pow(2).sum().item<double>();
    out[i] = std::sqrt(sq);
  }
  return out;
}

void set_requires_grad(torch::nn::Module& m, bool on) {
  for (auto& p : m.parameters()) p.set_requires_grad(on);
}

std::string describe(const char* name, const Decomposition& d) {
  std::ostringstream os;
  os << std::setprecision(6);
  auto z = d.depth.detach();
  os << name << ": depth mean " << z.mean().item<double>() << " std " << z.std().item<double>() << " min "
     << z.min().item<double>() << " max " << z.max().item<double>();
  auto stats = [&](const char* label, const torch::Tensor& t) {
    auto v = t.detach();
    os << "; " << label << " min " << v.min().item<double>() << " max " << v.max().item<double>();
  };
  stats("t_D", d.params.t_d);
  stats("t_B", d.params.t_b);
  stats("B_inf", d.params.b_inf);
  return os.str();
}

torch::Tensor bhat_term(const torch::Tensor& observed_raw, const torch::Tensor& observed_clamped,
                        const Decomposition& d, const TrainConfig& cfg) {
  auto mask = darkest_mask(dcp_map(observed_clamped.detach()), cfg.dark_fraction, cfg.dark_cap);
  return backscatter_fidelity(observed_raw, d, mask);
}

}  // namespace

torch::Tensor ImagePool::query(const torch::Tensor& batch, std::mt19937_64& rng) {
  if (capacity_ <= 0) return batch;
  std::vector<torch::Tensor> out;
  for (int64_t i = 0; i < batch.size(0); ++i) {
    auto img = batch[i].detach().clone();
    if (static_cast<int64_t>(images_.size()) < capacity_) {
      images_.push_back(img);
      out.push_back(img);
    } else if (uniform01(rng) > 0.5) {
      const auto j = static_cast<std::size_t>(rng() % static_cast<uint64_t>(capacity_));
      out.push_back(images_[j]);
      images_[j] = img;
    } else {
      out.push_back(img);
    }
  }
  return torch::stack(out);
}

TrainState::TrainState(TrainConfig config)
    : cfg(std::move(config)), pool_underwater(cfg.pool_size), pool_terrestrial(cfg.pool_size), rng(cfg.seed) {
  torch::manual_seed(cfg.seed);
  G = Generator(cfg.generator_options());
  F = Generator(cfg.generator_options());
  D_underwater = Discriminator(cfg.discriminator_options());
  D_terrestrial = Discriminator(cfg.discriminator_options());
  for (torch::nn::Module* m : {static_cast<torch::nn::Module*>(G.get()), static_cast<torch::nn::Module*>(F.get()),
                               static_cast<torch::nn::Module*>(D_underwater.get()),
                               static_cast<torch::nn::Module*>(D_terrestrial.get())})
    init_weights(*m);
  perceptual = make_perceptual_encoder(cfg.perceptual_spec());

  auto adam = [&](double lr) {
    return torch::optim::AdamOptions(lr).betas({cfg.adam_beta1, cfg.adam_beta2});
  };
  std::vector<torch::Tensor> depth_params = G->depth->parameters();
  for (auto& p : F->depth->parameters()) depth_params.push_back(p);
  std::vector<torch::Tensor> coeff_params = coefficient_parameters(G);
  for (auto& p : coefficient_parameters(F)) coeff_params.push_back(p);
  std::vector<torch::optim::OptimizerParamGroup> groups;
  groups.emplace_back(depth_params, std::make_unique<torch::optim::AdamOptions>(adam(cfg.lr_depth)));
  groups.emplace_back(coeff_params, std::make_unique<torch::optim::AdamOptions>(adam(cfg.lr_coeff)));
  opt_generators = std::make_unique<torch::optim::Adam>(std::move(groups), adam(cfg.lr_depth));
  opt_d_underwater = std::make_unique<torch::optim::Adam>(D_underwater->parameters(), adam(cfg.lr_disc));
  opt_d_terrestrial = std::make_unique<torch::optim::Adam>(D_terrestrial->parameters(), adam(cfg.lr_disc));
}

void TrainState::set_learning_rates(double depth, double coeff, double disc) {
  auto set = [](torch::optim::OptimizerParamGroup& g, double lr) {
    static_cast<torch::optim::AdamOptions&>(g.options()).lr(lr);
  };
  set(opt_generators->param_groups()[0], depth);
  set(opt_generators->param_groups()[1], coeff);
  set(opt_d_underwater->param_groups()[0], disc);
  set(opt_d_terrestrial->param_groups()[0], disc);
}

std::array<double, 3> TrainState::learning_rates() const {
  auto get = [](const torch::optim::OptimizerParamGroup& g) {
    return static_cast<const torch::optim::AdamOptions&>(g.options()).lr();
  };
  return {get(opt_generators->param_groups()[0]), get(opt_generators->param_groups()[1]),
          get(opt_d_underwater->param_groups()[0])};
}

double lr_at(int64_t epoch, const TrainConfig& cfg, double base) {
  if (epoch < cfg.decay_start_epoch) return base;
  const double span = static_cast<double>(cfg.total_epochs - cfg.decay_start_epoch);
  return base * static_cast<double>(cfg.total_epochs - epoch) / span;
}

StepResult training_step(TrainState& st, const torch::Tensor& x, const torch::Tensor& y) {
  const auto& cfg = st.cfg;
  st.G->train();
  st.F->train();
  st.D_underwater->train();
  st.D_terrestrial->train();

  // Generator update with frozen discriminators.
  set_requires_grad(*st.D_underwater, false);
  set_requires_grad(*st.D_terrestrial, false);

  auto fake_y = generate_underwater(st.G, x);
  auto fake_x = generate_terrestrial(st.F, y);
  auto x_rec = generate_terrestrial(st.F, fake_y.fake.image, fake_y.fake.raw);
  auto y_rec = generate_underwater(st.G, fake_x.fake.image, fake_x.fake.raw);

  auto l_g = adversarial_generator(discriminate(st.D_underwater, fake_y.fake.image)) +
             adversarial_generator(discriminate(st.D_terrestrial, fake_x.fake.image));
  auto l_cycle = cycle_consistency(x, x_rec.fake.raw, y, y_rec.fake.raw);
  auto l_perc = perceptual(x, x_rec.fake.raw, st.perceptual);
  if (cfg.perceptual_both_directions) l_perc = l_perc + perceptual(y, y_rec.fake.raw, st.perceptual);
  auto l_bhat = torch::zeros({}, x.options());
  if (cfg.hyp2) {
    l_bhat = bhat_term(y, y, fake_x.decomposition, cfg);
    if (cfg.bhat_on_generated)
      l_bhat = l_bhat + bhat_term(fake_y.fake.raw, fake_y.fake.image, fake_y.decomposition, cfg);
  }
  auto loss = total(l_g, l_cycle, l_perc, l_bhat, cfg.weights);

  StepResult result;
  for (const auto* d : {&fake_y.decomposition, &fake_x.decomposition, &x_rec.decomposition, &y_rec.decomposition})
    for (auto& v : d->violations()) result.violations.push_back(v);

  auto& r = result.report;
  r.l_g = l_g.item<double>();
  r.l_cycle = l_cycle.item<double>();
  r.l_perc = l_perc.item<double>();
  r.l_bhat = l_bhat.item<double>();
  r.total = loss.item<double>();
  if (!std::isfinite(r.total)) {
    std::ostringstream os;
    os << "non-finite generator loss at iteration " << st.iteration << " (l_g " << r.l_g << ", l_cycle "
       << r.l_cycle << ", l_perc " << r.l_perc << ", l_bhat " << r.l_bhat << ")\n"
       << describe("G(x)", fake_y.decomposition) << "\n"
       << describe("F(y)", fake_x.decomposition);
    throw TrainingDiverged(os.str());
  }

  st.opt_generators->zero_grad();
  loss.backward();
  result.grad_norm_g = grad_norms(st.G);
  result.grad_norm_f = grad_norms(st.F);
  st.opt_generators->step();

  // Discriminator updates on pooled, detached fakes.
  set_requires_grad(*st.D_underwater, true);
  set_requires_grad(*st.D_terrestrial, true);
  auto pooled_y = st.pool_underwater.query(fake_y.fake.image.detach(), st.rng);
  auto pooled_x = st.pool_terrestrial.query(fake_x.fake.image.detach(), st.rng);

  auto l_d_u = adversarial_discriminator(discriminate(st.D_underwater, y), discriminate(st.D_underwater, pooled_y));
  st.opt_d_underwater->zero_grad();
  l_d_u.backward();
  st.opt_d_underwater->step();

  auto l_d_t =
      adversarial_discriminator(discriminate(st.D_terrestrial, x), discriminate(st.D_terrestrial, pooled_x));
  st.opt_d_terrestrial->zero_grad();
  l_d_t.backward();
  st.opt_d_terrestrial->step();

  r.l_d = l_d_u.item<double>() + l_d_t.item<double>();
  if (!std::isfinite(r.l_d)) throw TrainingDiverged("non-finite discriminator loss at iteration " +
                                                    std::to_string(st.iteration));
  return result;
}

std::string log_header() {
  return "epoch,iteration,l_g,l_d,l_cycle,l_perc,l_bhat,total,lr_depth,lr_coeff,lr_disc";
}

namespace {

void write_preview(TrainState& st, const torch::Tensor& x, const torch::Tensor& y, const std::filesystem::path& path) {
  torch::NoGradGuard no_grad;
  st.G->eval();
  st.F->eval();
  auto xs = x.narrow(0, 0, 1);
  auto ys = y.narrow(0, 0, 1);
  auto restored = generate_terrestrial(st.F, ys);
  auto synthetic = generate_underwater(st.G, xs);
  auto backscatter = estimate_backscatter(restored.decomposition.depth, restored.decomposition.params);
  std::vector<std::vector<torch::Tensor>> rows = {
      {ys[0], restored.fake.image[0], restored.decomposition.depth[0] / kDepthMax, backscatter[0]},
      {xs[0], synthetic.fake.image[0], synthetic.decomposition.depth[0] / kDepthMax}};
  save_image(path, compose_grid(rows, st.cfg.image_size));
  st.G->train();
  st.F->train();
}

}  // namespace

std::filesystem::path run(TrainState& st, const UnpairedDataset& ds, const std::filesystem::path& out_dir,
                          const RunOptions& opts) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path latest = out_dir / "latest.pt";
  auto checkpoint = [&](int64_t epoch) {
    std::ostringstream name;
    name << "checkpoint_epoch_" << std::setw(4) << std::setfill('0') << epoch << ".pt";
    save_checkpoint(st, out_dir / name.str());
    save_checkpoint(st, latest);
  };

  const fs::path log_path = out_dir / "train_log.csv";
  const bool fresh_log = !fs::exists(log_path) || st.iteration == 0;
  std::ofstream log(log_path, fresh_log ? std::ios::trunc : std::ios::app);
  if (!log) throw IoError(log_path.string(), "cannot open training log");
  if (fresh_log) log << log_header() << "\n";
  log << std::setprecision(9);

  if (st.iteration == 0 && st.epoch == 0) checkpoint(0);

  BatchSampler sampler(ds, static_cast<int>(st.cfg.batch_size), st.cfg.seed);
  for (int64_t epoch = st.epoch; epoch < st.cfg.total_epochs; ++epoch) {
    sampler.start_epoch(epoch);
    sampler.skip(st.epoch_iteration);
    const double lr_d = lr_at(epoch, st.cfg, st.cfg.lr_depth);
    const double lr_c = lr_at(epoch, st.cfg, st.cfg.lr_coeff);
    const double lr_s = lr_at(epoch, st.cfg, st.cfg.lr_disc);
    st.set_learning_rates(lr_d, lr_c, lr_s);
    const auto start = std::chrono::steady_clock::now();
    while (auto batch = sampler.next_batch()) {
      if (opts.max_iterations >= 0 && st.iteration >= opts.max_iterations) {
        save_checkpoint(st, latest);
        return latest;
      }
      auto res = training_step(st, batch->terrestrial, batch->underwater);
      ++st.iteration;
      ++st.epoch_iteration;
      const auto& r = res.report;
      log << epoch << "," << st.iteration << "," << r.l_g << "," << r.l_d << "," << r.l_cycle << "," << r.l_perc
          << "," << r.l_bhat << "," << r.total << "," << lr_d << "," << lr_c << "," << lr_s << "\n";
      log.flush();
      if (opts.verbose)
        std::cout << "epoch " << epoch << " iter " << st.iteration << " total " << r.total << " l_g " << r.l_g
                  << " l_d " << r.l_d << " l_cycle " << r.l_cycle << " l_perc " << r.l_perc << " l_bhat "
                  << r.l_bhat << std::endl;
      if (st.cfg.sample_every > 0 && st.iteration % st.cfg.sample_every == 0) {
        std::ostringstream name;
        name << "iter_" << std::setw(6) << std::setfill('0') << st.iteration << ".png";
        write_preview(st, batch->terrestrial, batch->underwater, out_dir / "samples" / name.str());
      }
    }
    st.epoch = epoch + 1;
    st.epoch_iteration = 0;
    checkpoint(st.epoch);
    if (opts.verbose) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      std::cout << "epoch " << epoch << " done in " << secs << " s" << std::endl;
    }
  }
  return latest;
}

}  // namespace hybrur
