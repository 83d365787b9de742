#include "doctest_torch.hpp"

#include <fstream>

#include "hybrur/errors.hpp"
#include "hybrur/trainer.hpp"
#include "support.hpp"

using namespace hybrur;

namespace {

TrainConfig tiny_config(uint64_t seed = 1) {
  TrainConfig c;
  c.image_size = 32;
  c.depth_channels = 4;
  c.residual_blocks = 1;
  c.encoder_channels = 4;
  c.encoder_blocks = 3;
  c.disc_channels = 4;
  c.perceptual_encoder = "random";
  c.perceptual_width = 4;
  c.batch_size = 2;
  c.pool_size = 3;
  c.seed = seed;
  c.total_epochs = 2;
  c.decay_start_epoch = 1;
  c.sample_every = 0;
  return c;
}

std::pair<torch::Tensor, torch::Tensor> batch(uint64_t seed) {
  testing::Gen gen(seed);
  return {gen.tensor({2, 3, 32, 32}, 0, 1, torch::kFloat32), gen.tensor({2, 3, 32, 32}, 0, 1, torch::kFloat32)};
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("learning-rate schedule") {
  TrainConfig c;
  CHECK(lr_at(0, c, 2e-4) == 2e-4);
  CHECK(lr_at(29, c, 2e-4) == 2e-4);
  CHECK(lr_at(30, c, 2e-4) == 2e-4);
  CHECK(lr_at(45, c, 2e-4) == doctest::Approx(1e-4));
  CHECK(lr_at(59, c, 3e-4) == doctest::Approx(1e-5));
  CHECK(lr_at(60, c, 2e-4) == 0.0);
}

TEST_CASE("image pool") {
  std::mt19937_64 rng(3);
  ImagePool off(0);
  auto b = torch::rand({2, 3, 4, 4});
  CHECK(testing::max_abs_diff(off.query(b, rng), b) == 0.0);
  CHECK(off.images().empty());

  ImagePool pool(4);
  auto first = torch::rand({4, 3, 4, 4});
  CHECK(testing::max_abs_diff(pool.query(first, rng), first) == 0.0);  // filling passes through
  CHECK(pool.images().size() == 4);
  int swapped = 0;
  for (int i = 0; i < 200; ++i) {
    auto img = torch::full({1, 3, 4, 4}, static_cast<float>(i + 10));
    auto out = pool.query(img, rng);
    if (out[0][0][0][0].item<float>() != static_cast<float>(i + 10)) ++swapped;
  }
  CHECK(swapped > 60);
  CHECK(swapped < 140);
  CHECK(pool.images().size() == 4);
}

TEST_CASE("optimizer groups carry the three learning rates") {
  TrainState st(tiny_config());
  auto lr = st.learning_rates();
  CHECK(lr[0] == 2e-4);
  CHECK(lr[1] == 1e-4);
  CHECK(lr[2] == 1e-4);
  st.set_learning_rates(1.0, 2.0, 3.0);
  lr = st.learning_rates();
  CHECK(lr[0] == 1.0);
  CHECK(lr[1] == 2.0);
  CHECK(lr[2] == 3.0);
  CHECK(st.opt_d_terrestrial->param_groups()[0].options().get_lr() == 3.0);
  CHECK(st.opt_generators->param_groups().size() == 2);
}

TEST_CASE("a step is finite and reaches every sub-module") {
  for (bool hyp1 : {false, true})
    for (bool hyp2 : {false, true}) {
      auto cfg = tiny_config();
      cfg.hyp1 = hyp1;
      cfg.hyp2 = hyp2;
      TrainState st(cfg);
      auto [x, y] = batch(4);
      auto r = training_step(st, x, y);
      CHECK(r.report.finite());
      CHECK(r.violations.empty());
      CHECK(r.report.l_bhat == (hyp2 ? r.report.l_bhat : 0.0));
      if (hyp2) CHECK(r.report.l_bhat > 0.0);
      for (int k = 0; k < 4; ++k) {
        CHECK(r.grad_norm_g[k] > 0.0);
        CHECK(r.grad_norm_f[k] > 0.0);
      }
      CHECK(r.report.total == doctest::Approx(total(r.report, cfg.weights)).epsilon(1e-5));
    }
}

TEST_CASE("training is deterministic for a seed") {
  TrainState a(tiny_config(5)), b(tiny_config(5));
  for (uint64_t i = 0; i < 2; ++i) {
    auto [x, y] = batch(10 + i);
    CHECK(training_step(a, x, y).report == training_step(b, x, y).report);
  }
  TrainState c(tiny_config(6));
  auto [x, y] = batch(10);
  TrainState d(tiny_config(5));
  CHECK_FALSE(training_step(c, x, y).report == training_step(d, x, y).report);
}

TEST_CASE("checkpoint round trip") {
  testing::TempDir dir("ckpt");
  TrainState st(tiny_config(7));
  for (uint64_t i = 0; i < 2; ++i) {
    auto [x, y] = batch(20 + i);
    training_step(st, x, y);
  }
  st.iteration = 2;
  st.epoch = 1;
  st.epoch_iteration = 0;
  save_checkpoint(st, dir / "c.pt");
  auto loaded = load_checkpoint(dir / "c.pt");
  CHECK(loaded->iteration == 2);
  CHECK(loaded->epoch == 1);
  CHECK(to_json(loaded->cfg) == to_json(st.cfg));
  CHECK(loaded->pool_underwater.images().size() == st.pool_underwater.images().size());

  auto probe = batch(30).first;
  {
    torch::NoGradGuard ng;
    st.F->eval();
    loaded->F->eval();
    auto a = generate_terrestrial(st.F, probe), b = generate_terrestrial(loaded->F, probe);
    CHECK(torch::equal(a.fake.raw, b.fake.raw));
    CHECK(torch::equal(a.decomposition.depth, b.decomposition.depth));
  }
  for (uint64_t i = 0; i < 3; ++i) {
    auto [x, y] = batch(40 + i);
    CHECK(training_step(st, x, y).report == training_step(*loaded, x, y).report);
  }
}

TEST_CASE("checkpoint errors") {
  testing::TempDir dir("ckpt_err");
  CHECK_THROWS_AS(load_checkpoint(dir / "none.pt"), IoError);
  std::ofstream(dir / "junk.pt") << "junk";
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.pt"), IoError);
}

TEST_CASE("run writes checkpoints, logs and previews and resumes exactly") {
  testing::TempDir dir("run");
  testing::Gen gen(50);
  for (const char* d : {"u", "t"}) {
    std::filesystem::create_directories(dir / d);
    for (int i = 0; i < 4; ++i) save_image(dir / (std::string(d) + "/" + std::to_string(i) + ".png"), gen.image(20, 20));
  }
  auto ds = UnpairedDataset::from_dirs(dir / "u", dir / "t", 32);
  auto cfg = tiny_config(9);
  cfg.sample_every = 3;
  RunOptions quiet;
  quiet.verbose = false;

  TrainState full(cfg);
  auto latest = run(full, ds, dir / "full", quiet);
  CHECK(latest == dir / "full" / "latest.pt");
  for (const char* f : {"checkpoint_epoch_0000.pt", "checkpoint_epoch_0001.pt", "checkpoint_epoch_0002.pt",
                        "latest.pt", "train_log.csv", "samples/iter_000003.png"})
    CHECK_MESSAGE(std::filesystem::exists(dir / "full" / f), f);
  auto log = read_lines(dir / "full" / "train_log.csv");
  REQUIRE(log.size() == 5);
  CHECK(log[0] == log_header());
  CHECK(full.epoch == 2);
  CHECK(full.iteration == 4);

  // Resume from the epoch-1 checkpoint into a fresh directory.
  auto resumed = load_checkpoint(dir / "full" / "checkpoint_epoch_0001.pt");
  CHECK(resumed->epoch == 1);
  run(*resumed, ds, dir / "resumed", quiet);
  auto tail = read_lines(dir / "resumed" / "train_log.csv");
  REQUIRE(tail.size() == 3);
  CHECK(tail[1] == log[3]);
  CHECK(tail[2] == log[4]);

  // Stopping mid-epoch leaves a resumable checkpoint.
  TrainState part(cfg);
  RunOptions stop = quiet;
  stop.max_iterations = 1;
  run(part, ds, dir / "part", stop);
  auto mid = load_checkpoint(dir / "part" / "latest.pt");
  CHECK(mid->epoch_iteration == 1);
  run(*mid, ds, dir / "part", quiet);
  auto joined = read_lines(dir / "part" / "train_log.csv");
  REQUIRE(joined.size() == 5);
  for (std::size_t i = 1; i < 5; ++i) CHECK(joined[i] == log[i]);
}

}  // TEST_SUITE
