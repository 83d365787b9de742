#include "doctest_torch.hpp"

#include "hybrur/dcp.hpp"
#include "hybrur/errors.hpp"
#include "hybrur/losses.hpp"
#include "support.hpp"

using namespace hybrur;

namespace {

double mean_loop(const torch::Tensor& t, double (*f)(double)) {
  auto flat = t.flatten();
  double s = 0.0;
  for (int64_t i = 0; i < flat.numel(); ++i) s += f(flat[i].item<double>());
  return s / static_cast<double>(flat.numel());
}

Decomposition random_decomposition(testing::Gen& gen, int64_t n, int64_t h, int64_t w) {
  Decomposition d;
  d.depth = gen.tensor({n, 1, h, w}, 0.0, 6.0);
  d.params = {gen.tensor({n, 3}, 0.2, 0.99), gen.tensor({n, 3}, 0.2, 0.99), gen.tensor({n, 3}, 0.6, 1.0)};
  return d;
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("adversarial terms match loop oracles") {
  testing::Gen gen(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<torch::Tensor> real = {gen.tensor({2, 1, 4, 4}, -1, 2), gen.tensor({2, 1, 2, 2}, -1, 2)};
    std::vector<torch::Tensor> fake = {gen.tensor({2, 1, 4, 4}, -1, 2), gen.tensor({2, 1, 2, 2}, -1, 2)};
    auto sq1 = [](double v) { return (v - 1) * (v - 1); };
    auto sq0 = [](double v) { return v * v; };
    const double g = (mean_loop(fake[0], sq1) + mean_loop(fake[1], sq1)) / 2;
    const double d =
        (mean_loop(real[0], sq1) + mean_loop(fake[0], sq0) + mean_loop(real[1], sq1) + mean_loop(fake[1], sq0)) / 2;
    CHECK(adversarial_generator(fake).item<double>() == doctest::Approx(g).epsilon(1e-12));
    CHECK(adversarial_discriminator(real, fake).item<double>() == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("adversarial fixed points") {
  std::vector<torch::Tensor> ones = {torch::ones({1, 1, 4, 4}, torch::kFloat64), torch::ones({1, 1, 2, 2}, torch::kFloat64)};
  std::vector<torch::Tensor> zeros = {torch::zeros({1, 1, 4, 4}, torch::kFloat64), torch::zeros({1, 1, 2, 2}, torch::kFloat64)};
  CHECK(adversarial_generator(ones).item<double>() == 0.0);
  CHECK(adversarial_discriminator(ones, zeros).item<double>() == 0.0);
  CHECK_THROWS_AS(adversarial_generator({}), ContractViolation);
  CHECK_THROWS_AS(adversarial_discriminator(ones, {zeros[0]}), ContractViolation);
}

TEST_CASE("cycle loss") {
  testing::Gen gen(2);
  auto x = gen.tensor({2, 3, 4, 4}, 0, 1), y = gen.tensor({2, 3, 4, 4}, 0, 1);
  CHECK(cycle_consistency(x, x, y, y).item<double>() == 0.0);
  auto xr = gen.tensor({2, 3, 4, 4}, 0, 1), yr = gen.tensor({2, 3, 4, 4}, 0, 1);
  double sx = 0, sy = 0;
  auto fx = x.flatten(), fxr = xr.flatten(), fy = y.flatten(), fyr = yr.flatten();
  for (int64_t i = 0; i < fx.numel(); ++i) {
    sx += std::abs(fxr[i].item<double>() - fx[i].item<double>());
    sy += std::abs(fyr[i].item<double>() - fy[i].item<double>());
  }
  const double n = static_cast<double>(fx.numel());
  CHECK(cycle_consistency(x, xr, y, yr).item<double>() == doctest::Approx(sx / n + sy / n).epsilon(1e-12));
}

TEST_CASE("perceptual distance") {
  PerceptualSpec spec;
  spec.kind = "random";
  spec.width = 4;
  spec.seed = 3;
  auto enc = make_perceptual_encoder(spec);
  for (const auto& p : enc->parameters()) CHECK_FALSE(p.requires_grad());

  testing::Gen gen(3);
  auto a = gen.tensor({2, 3, 16, 16}, 0, 1, torch::kFloat32);
  auto b = gen.tensor({2, 3, 16, 16}, 0, 1, torch::kFloat32);
  CHECK(perceptual(a, a, enc).item<double>() == 0.0);
  auto bg = b.clone().set_requires_grad(true);
  auto l = perceptual(a, bg, enc);
  CHECK(l.item<double>() > 0.0);
  l.backward();
  CHECK(bg.grad().abs().sum().item<double>() > 0.0);

  // Oracle: explicit loops over the feature map.
  torch::NoGradGuard ng;
  auto fa = enc->forward(a).to(torch::kFloat64), fb = enc->forward(b).to(torch::kFloat64);
  double s = 0;
  for (int64_t n = 0; n < fa.size(0); ++n)
    for (int64_t y = 0; y < fa.size(2); ++y)
      for (int64_t x = 0; x < fa.size(3); ++x)
        for (int64_t c = 0; c < fa.size(1); ++c) {
          const double d = fa[n][c][y][x].item<double>() - fb[n][c][y][x].item<double>();
          s += d * d;
        }
  s /= static_cast<double>(fa.size(0) * fa.size(2) * fa.size(3));
  CHECK(perceptual(a, b, enc).item<double>() == doctest::Approx(s).epsilon(1e-5));

  // same seed, same features
  auto again = make_perceptual_encoder(spec);
  CHECK(testing::max_abs_diff(again->forward(a), enc->forward(a)) == 0.0);
}

TEST_CASE("perceptual encoder configuration errors") {
  PerceptualSpec spec;
  spec.weights = "/nonexistent/vgg16.pt";
  CHECK_THROWS_AS(make_perceptual_encoder(spec), ConfigError);
  spec.kind = "alexnet";
  CHECK_THROWS_AS(make_perceptual_encoder(spec), ConfigError);
  PerceptualSpec narrow;
  narrow.width = 8;
  CHECK_THROWS_AS(make_perceptual_encoder(narrow), ConfigError);
}

TEST_CASE("backscatter fidelity") {
  testing::Gen gen(4);
  for (int trial = 0; trial < 10; ++trial) {
    auto d = random_decomposition(gen, 2, 6, 5);
    auto img = gen.tensor({2, 3, 6, 5}, 0, 1);
    auto mask = darkest_mask(dcp_map(img), 0.2);
    auto bhat = estimate_backscatter(d.depth, d.params);
    double s = 0, count = 0;
    for (int64_t n = 0; n < 2; ++n)
      for (int64_t y = 0; y < 6; ++y)
        for (int64_t x = 0; x < 5; ++x) {
          if (mask[n][0][y][x].item<double>() == 0.0) continue;
          count += 1;
          for (int64_t c = 0; c < 3; ++c) s += std::abs(img[n][c][y][x].item<double>() - bhat[n][c][y][x].item<double>());
        }
    CHECK(backscatter_fidelity(img, d, mask).item<double>() == doctest::Approx(s / (3 * count)).epsilon(1e-12));
    // fixed point: the observation equals the estimate
    CHECK(backscatter_fidelity(bhat, d, mask).item<double>() == 0.0);
  }
  auto d = random_decomposition(gen, 1, 4, 4);
  CHECK_THROWS_AS(backscatter_fidelity(torch::zeros({1, 3, 4, 4}, torch::kFloat64), d, torch::zeros({1, 1, 4, 4})),
                  ContractViolation);
}

TEST_CASE("backscatter gradient reaches depth and coefficients") {
  testing::Gen gen(5);
  auto d = random_decomposition(gen, 1, 4, 4);
  d.depth.set_requires_grad(true);
  d.params.t_b.set_requires_grad(true);
  d.params.b_inf.set_requires_grad(true);
  backscatter_fidelity(gen.tensor({1, 3, 4, 4}, 0, 1), d, torch::ones({1, 1, 4, 4})).backward();
  CHECK(d.depth.grad().abs().sum().item<double>() > 0);
  CHECK(d.params.t_b.grad().abs().sum().item<double>() > 0);
  CHECK(d.params.b_inf.grad().abs().sum().item<double>() > 0);
}

TEST_CASE("weighted total") {
  LossReport unit{1, 0, 1, 1, 1, 0};
  CHECK(total(unit, LossWeights{}) == 9.1);
  auto one = torch::ones({}, torch::kFloat64);
  CHECK(total(one, one, one, one, LossWeights{}).item<double>() == 9.1);
  LossReport r{0.5, 0.2, 0.25, 3.0, 0.125, 0};
  CHECK(total(r, LossWeights{}) == doctest::Approx(3 * 0.5 + 4 * 0.25 + 0.1 * 3.0 + 2 * 0.125));
  CHECK(total(LossReport{}, LossWeights{}) == 0.0);
}

TEST_CASE("finiteness check") {
  LossReport r;
  CHECK(r.finite());
  r.l_perc = std::nan("");
  CHECK_FALSE(r.finite());
}

}  // TEST_SUITE
