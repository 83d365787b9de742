#include "doctest_torch.hpp"

#include <algorithm>
#include <numeric>

#include "hybrur/errors.hpp"
#include "hybrur/metrics.hpp"
#include "metric_oracles.hpp"
#include "support.hpp"

using namespace hybrur;

TEST_SUITE("metrics") {

TEST_CASE("uniform gray scores zero") {
  for (double v : {0.0, 0.3, 0.5, 1.0}) {
    auto u = uciqe(ImageRGB{torch::full({3, 8, 8}, v, torch::kFloat64)});
    CHECK(u.sigma_c == 0.0);
    CHECK(u.con_l == 0.0);
    CHECK(u.mu_s == 0.0);
    CHECK(u.uciqe == 0.0);
  }
}

TEST_CASE("UCIQE is the weighted sum of its statistics") {
  testing::Gen gen(1);
  for (int i = 0; i < 10; ++i) {
    auto u = uciqe(ImageRGB{gen.image(16, 16)});
    CHECK(std::abs(u.combine() - u.uciqe) <= 1e-12);
    CHECK(std::abs(0.468 * u.sigma_c + 0.2745 * u.con_l + 0.2576 * u.mu_s - u.uciqe) <= 1e-12);
  }
}

TEST_CASE("metrics match brute-force oracles") {
  testing::Gen gen(2);
  for (int i = 0; i < 20; ++i) {
    ImageRGB img{gen.image(32, 32)};
    ImageRGB other{gen.image(32, 32)};
    auto u = uciqe(img);
    auto ru = oracle::uciqe(img.data);
    CHECK(std::abs(u.sigma_c - ru[0]) < 1e-9);
    CHECK(std::abs(u.con_l - ru[1]) < 1e-9);
    CHECK(std::abs(u.mu_s - ru[2]) < 1e-9);
    CHECK(std::abs(u.uciqe - ru[3]) < 1e-9);
    auto l = lab_u_index(img);
    auto rl = oracle::lab_u(img.data);
    CHECK(std::abs(l.d_o - rl[0]) < 1e-9);
    CHECK(std::abs(l.d_a - rl[1]) < 1e-9);
    CHECK(std::abs(l.d_b - rl[2]) < 1e-9);
    CHECK(std::abs(l.a_l - rl[3]) < 1e-9);
    CHECK(std::abs(l.u - rl[4]) < 1e-9 * std::max(1.0, rl[4]));
    CHECK(std::abs(rms_contrast(img) - oracle::rms_contrast(img.data)) < 1e-9);
    CHECK(std::abs(laplacian_variance(img) - oracle::laplacian_variance(img.data)) < 1e-9);
    CHECK(std::abs(ssim(img, other) - oracle::ssim(img.data, other.data)) < 1e-6);
  }
}

TEST_CASE("two-tone image") {
  auto t = torch::zeros({3, 4, 4}, torch::kFloat64);
  t[0].narrow(0, 0, 2).fill_(1.0);  // top half saturated red, bottom half black
  ImageRGB img{t};
  auto ref = oracle::uciqe(t);
  auto u = uciqe(img);
  CHECK(u.uciqe == doctest::Approx(ref[3]).epsilon(1e-12));
  // Red has L ~ 53.24; half the pixels black, so con_l is that L over 100.
  CHECK(u.con_l == doctest::Approx(0.5324).epsilon(1e-3));
}

TEST_CASE("contrast of a two-level image") {
  auto t = torch::zeros({3, 4, 4}, torch::kFloat64);
  t.narrow(1, 0, 2).fill_(1.0);
  CHECK(rms_contrast(ImageRGB{t}) == doctest::Approx(127.5).epsilon(1e-12));
  CHECK(rms_contrast(ImageRGB{torch::full({3, 5, 5}, 0.4, torch::kFloat64)}) == doctest::Approx(0.0).scale(1e-9));
  CHECK(laplacian_variance(ImageRGB{torch::full({3, 5, 5}, 0.4, torch::kFloat64)}) ==
        doctest::Approx(0.0).scale(1e-9));
}

TEST_CASE("SSIM reference values") {
  // skimage.metrics.structural_similarity(gaussian_weights, sigma 1.5,
  // population covariance, data_range 1) on the same grayscale images.
  auto ii = torch::arange(32, torch::kFloat64).view({32, 1}).expand({32, 32});
  auto jj = torch::arange(32, torch::kFloat64).view({1, 32}).expand({32, 32});
  auto a = (torch::remainder(ii * 7 + jj * 3, 11) < 5).to(torch::kFloat64);
  auto rgb = [](const torch::Tensor& g) { return ImageRGB{torch::stack({g, g, g})}; };
  CHECK(ssim(rgb(a), rgb(1.0 - a)) == doctest::Approx(-0.9754293676943896).epsilon(1e-6));

  auto b = 0.5 + 0.4 * torch::sin(ii / 3.0) * torch::cos(jj / 5.0);
  auto c = (b + 0.1 * torch::cos(ii * jj / 7.0)).clamp(0.0, 1.0);
  CHECK(ssim(rgb(b), rgb(c)) == doctest::Approx(0.778486075434059).epsilon(1e-6));
}

TEST_CASE("SSIM identities and contracts") {
  testing::Gen gen(3);
  ImageRGB a{gen.image(20, 24)}, b{gen.image(20, 24)};
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(ssim(a, b) - ssim(b, a)) < 1e-9);
  CHECK_THROWS_AS(ssim(a, ImageRGB{gen.image(20, 25)}), ContractViolation);
  CHECK_THROWS_AS(ssim(ImageRGB{gen.image(8, 8)}, ImageRGB{gen.image(8, 8)}), ContractViolation);
}

TEST_CASE("percentile interpolates like numpy") {
  auto v = torch::tensor({3.0, 1.0, 4.0, 1.5, 9.0});
  CHECK(percentile(v, 0) == 1.0);
  CHECK(percentile(v, 100) == 9.0);
  CHECK(percentile(v, 50) == 3.0);
  CHECK(percentile(v, 10) == doctest::Approx(1.2));  // numpy.percentile
  CHECK(percentile(v, 99) == doctest::Approx(8.8));
}

TEST_CASE("a colour cast raises the U index") {
  testing::Gen gen(4);
  auto lab = rgb_to_lab(gen.image(16, 16));
  auto base = lab_u_index(lab);
  ImageLab cast{lab.L, lab.a + 20.0, lab.b - 15.0};
  auto shifted = lab_u_index(cast);
  CHECK(shifted.d_a == doctest::Approx(base.d_a).epsilon(1e-12));
  CHECK(shifted.a_l == base.a_l);
  CHECK(shifted.d_o > base.d_o);
  CHECK(shifted.u > base.u);
}

TEST_CASE("degenerate spans are floored and flagged") {
  auto u = lab_u_index(ImageRGB{torch::full({3, 6, 6}, 0.5, torch::kFloat64)});
  CHECK(u.degenerate);
  CHECK(std::isfinite(u.u));
  CHECK_FALSE(lab_u_index(ImageRGB{testing::Gen(5).image(8, 8)}).degenerate);
}

TEST_CASE("feature detectors") {
  auto flat = ImageRGB{torch::full({3, 64, 64}, 0.5)};
  auto fc = feature_counts(flat);
  CHECK(fc.sift == 0);
  CHECK(fc.harris == 0);

  auto ii = torch::arange(64).view({64, 1}).expand({64, 64});
  auto jj = torch::arange(64).view({1, 64}).expand({64, 64});
  auto board = (torch::remainder(ii.div(8, "floor") + jj.div(8, "floor"), 2)).to(torch::kFloat32);
  auto checker = ImageRGB{torch::stack({board, board, board})};
  CHECK(feature_counts(checker).harris > 0);

  testing::Gen gen(6);
  auto tex = ImageRGB{resize_bilinear(gen.image(24, 24, torch::kFloat32), 96, 96)};
  auto counts = feature_counts(tex);
  CHECK(sift_match_count(tex, tex) >= counts.sift);
  CHECK(sift_match_count(flat, tex) == 0);
  CHECK(sift_match_count(tex, flat) == 0);
  auto rotated = ImageRGB{tex.data.transpose(1, 2).flip(2).contiguous()};
  CHECK(sift_match_count(tex, rotated) > 0);
  CHECK(feature_counts(tex).sift == counts.sift);  // deterministic
}

}  // TEST_SUITE
