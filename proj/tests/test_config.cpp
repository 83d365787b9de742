#include "doctest_torch.hpp"

#include "hybrur/config.hpp"
#include "hybrur/errors.hpp"
#include "hybrur/params_io.hpp"
#include "support.hpp"

using namespace hybrur;

namespace {

std::string error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults") {
  TrainConfig c;
  CHECK(c.lr_depth == 2e-4);
  CHECK(c.lr_coeff == 1e-4);
  CHECK(c.lr_disc == 1e-4);
  CHECK(c.decay_start_epoch == 30);
  CHECK(c.batch_size == 16);
  CHECK(c.adam_beta1 == 0.5);
  CHECK(c.adam_beta2 == 0.999);
  CHECK(c.weights.lambda_g == 3.0);
  CHECK(c.weights.lambda_c == 4.0);
  CHECK(c.weights.lambda_p == 0.1);
  CHECK(c.weights.lambda_B == 2.0);
  CHECK(c.hyp1);
  CHECK(c.hyp2);
  CHECK(c.image_size == 256);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("JSON round trip") {
  TrainConfig c;
  c.seed = 12345678901234ULL;
  c.lr_depth = 3.3e-4;
  c.weights.lambda_p = 0.25;
  c.hyp2 = false;
  c.underwater_dir = "a/b";
  c.perceptual_encoder = "random";
  auto back = parse_config(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK(back.seed == c.seed);
  CHECK(back.lr_depth == c.lr_depth);
  CHECK(back.weights.lambda_p == 0.25);
  CHECK_FALSE(back.hyp2);
}

TEST_CASE("partial documents keep defaults") {
  auto c = parse_config(R"({"batch_size": 4, "weights": {"lambda_B": 0.5}})");
  CHECK(c.batch_size == 4);
  CHECK(c.weights.lambda_B == 0.5);
  CHECK(c.weights.lambda_g == 3.0);
  CHECK(c.lr_depth == 2e-4);
}

TEST_CASE("errors name the offending key") {
  CHECK(error_key(R"({"lr_deep": 0.1})") == "lr_deep");
  CHECK(error_key(R"({"batch_size": "big"})") == "batch_size");
  CHECK(error_key(R"({"weights": {"lambda_x": 1}})") == "weights.lambda_x");
  CHECK(error_key(R"({"lr_coeff": -1})") == "lr_coeff");
  CHECK(error_key(R"({"image_size": 30})") == "image_size");
  CHECK(error_key(R"({"decay_start_epoch": 70})") == "decay_start_epoch");
  CHECK(error_key(R"({"perceptual_encoder": "resnet"})") == "perceptual_encoder");
  CHECK(error_key("[1,2]") == "");
  CHECK(error_key("{not json") == "");
  try {
    parse_config(R"({"lr_deep": 0.1})");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("lr_deep") != std::string::npos);
  }
}

TEST_CASE("derived options") {
  TrainConfig c;
  c.depth_channels = 8;
  c.hyp1 = false;
  c.disc_channels = 12;
  CHECK(c.generator_options().depth_channels == 8);
  CHECK_FALSE(c.generator_options().hyp1);
  CHECK(c.discriminator_options().channels == 12);
  CHECK(c.perceptual_spec().kind == "vgg16");
}

TEST_CASE("config files") {
  testing::TempDir dir("cfg");
  CHECK_THROWS_AS(load_config(dir / "missing.json"), IoError);
}

TEST_CASE("parameter documents") {
  testing::Gen gen(1);
  auto p = gen.params();
  CHECK(params_from_json(params_to_json(p)) == p);

  testing::TempDir dir("params");
  save_params(dir / "p.json", p);
  CHECK(load_params(dir / "p.json") == p);

  auto missing = R"({"t_D_r":0.5,"t_D_g":0.5,"t_D_b":0.5,"t_B_r":0.5,"t_B_g":0.5,"t_B_b":0.5,"B_inf_r":0.8,"B_inf_g":0.8})";
  try {
    params_from_json(missing);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "B_inf_b");
  }
  auto extra = R"({"t_D_r":0.5,"t_D_g":0.5,"t_D_b":0.5,"t_B_r":0.5,"t_B_g":0.5,"t_B_b":0.5,"B_inf_r":0.8,"B_inf_g":0.8,"B_inf_b":0.8,"z":1})";
  CHECK_THROWS_AS(params_from_json(extra), ConfigError);
}

TEST_CASE("manifest round trip") {
  SyntheticManifest m;
  m.image = "u001.png";
  m.source = "/tmp/x.png";
  m.depth = "gradient:6";
  m.params.t_d.g = 0.31;
  m.image_size = 128;
  auto back = manifest_from_json(manifest_to_json(m));
  CHECK(back.image == m.image);
  CHECK(back.source == m.source);
  CHECK(back.depth == m.depth);
  CHECK(back.params == m.params);
  CHECK(back.image_size == 128);
}

TEST_CASE("shipped configs parse and validate") {
  for (const char* name : {"default.json", "smoke.json"}) {
    auto cfg = load_config(std::filesystem::path(HYBRUR_SOURCE_DIR) / "configs" / name);
    CHECK_NOTHROW(cfg.validate());
  }
  auto smoke = load_config(std::filesystem::path(HYBRUR_SOURCE_DIR) / "configs" / "smoke.json");
  CHECK(smoke.perceptual_encoder == "random");
  CHECK(smoke.batch_size == 4);
}

}  // TEST_SUITE
