#include "hybrur/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hybrur/errors.hpp"

namespace hybrur {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& value, const std::string& key) {
  try {
    return value.get<T>();
  } catch (const json::exception&) {
    throw ConfigError(key, "config key '" + key + "' has the wrong type");
  }
}

template <typename T>
void bind_key(std::map<std::string, std::function<void(const json&)>>& table, const std::string& key, T& field) {
  table[key] = [&field, key](const json& v) { field = get_as<T>(v, key); };
}

}  // namespace

GeneratorOptions TrainConfig::generator_options() const {
  GeneratorOptions o;
  o.image_size = image_size;
  o.depth_channels = depth_channels;
  o.residual_blocks = residual_blocks;
  o.encoder_channels = encoder_channels;
  o.encoder_blocks = encoder_blocks;
  o.hyp1 = hyp1;
  return o;
}

DiscriminatorOptions TrainConfig::discriminator_options() const {
  DiscriminatorOptions o;
  o.channels = disc_channels;
  return o;
}

PerceptualSpec TrainConfig::perceptual_spec() const {
  PerceptualSpec s;
  s.kind = perceptual_encoder;
  s.weights = perceptual_weights;
  s.width = perceptual_width;
  s.seed = seed;
  return s;
}

void TrainConfig::validate() const {
  auto positive = [](const char* key, double v) {
    if (!(v > 0.0)) throw ConfigError(key, std::string("config key '") + key + "' must be > 0");
  };
  positive("lr_depth", lr_depth);
  positive("lr_coeff", lr_coeff);
  positive("lr_disc", lr_disc);
  positive("batch_size", static_cast<double>(batch_size));
  positive("image_size", static_cast<double>(image_size));
  positive("depth_channels", static_cast<double>(depth_channels));
  positive("encoder_channels", static_cast<double>(encoder_channels));
  positive("disc_channels", static_cast<double>(disc_channels));
  positive("perceptual_width", static_cast<double>(perceptual_width));
  if (total_epochs < 0) throw ConfigError("total_epochs", "config key 'total_epochs' must be >= 0");
  if (total_epochs > 0 && !(decay_start_epoch >= 0 && decay_start_epoch < total_epochs))
    throw ConfigError("decay_start_epoch", "config key 'decay_start_epoch' must lie in [0, total_epochs)");
  if (image_size % 4 != 0) throw ConfigError("image_size", "config key 'image_size' must be divisible by 4");
  if (pool_size < 0) throw ConfigError("pool_size", "config key 'pool_size' must be >= 0");
  if (!(dark_fraction > 0.0 && dark_fraction <= 1.0))
    throw ConfigError("dark_fraction", "config key 'dark_fraction' must be in (0,1]");
  positive("dark_cap", static_cast<double>(dark_cap));
  for (auto [key, v] : {std::pair{"lambda_g", weights.lambda_g}, std::pair{"lambda_c", weights.lambda_c},
                        std::pair{"lambda_p", weights.lambda_p}, std::pair{"lambda_B", weights.lambda_B}})
    if (!(v >= 0.0)) throw ConfigError(key, std::string("config key '") + key + "' must be >= 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1", "adam_beta1 must be in [0,1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2", "adam_beta2 must be in [0,1)");
  if (perceptual_encoder != "vgg16" && perceptual_encoder != "random")
    throw ConfigError("perceptual_encoder", "perceptual_encoder must be 'vgg16' or 'random'");
}

TrainConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");

  TrainConfig cfg;
  std::map<std::string, std::function<void(const json&)>> table;
  bind_key(table, "lr_depth", cfg.lr_depth);
  bind_key(table, "lr_coeff", cfg.lr_coeff);
  bind_key(table, "lr_disc", cfg.lr_disc);
  bind_key(table, "decay_start_epoch", cfg.decay_start_epoch);
  bind_key(table, "total_epochs", cfg.total_epochs);
  bind_key(table, "batch_size", cfg.batch_size);
  bind_key(table, "adam_beta1", cfg.adam_beta1);
  bind_key(table, "adam_beta2", cfg.adam_beta2);
  bind_key(table, "hyp1", cfg.hyp1);
  bind_key(table, "hyp2", cfg.hyp2);
  bind_key(table, "seed", cfg.seed);
  bind_key(table, "pool_size", cfg.pool_size);
  bind_key(table, "underwater_dir", cfg.underwater_dir);
  bind_key(table, "terrestrial_dir", cfg.terrestrial_dir);
  bind_key(table, "image_size", cfg.image_size);
  bind_key(table, "out_dir", cfg.out_dir);
  bind_key(table, "depth_channels", cfg.depth_channels);
  bind_key(table, "residual_blocks", cfg.residual_blocks);
  bind_key(table, "encoder_channels", cfg.encoder_channels);
  bind_key(table, "encoder_blocks", cfg.encoder_blocks);
  bind_key(table, "disc_channels", cfg.disc_channels);
  bind_key(table, "perceptual_encoder", cfg.perceptual_encoder);
  bind_key(table, "perceptual_weights", cfg.perceptual_weights);
  bind_key(table, "perceptual_width", cfg.perceptual_width);
  bind_key(table, "perceptual_both_directions", cfg.perceptual_both_directions);
  bind_key(table, "bhat_on_generated", cfg.bhat_on_generated);
  bind_key(table, "dark_fraction", cfg.dark_fraction);
  bind_key(table, "dark_cap", cfg.dark_cap);
  bind_key(table, "sample_every", cfg.sample_every);

  std::map<std::string, std::function<void(const json&)>> weights;
  bind_key(weights, "lambda_g", cfg.weights.lambda_g);
  bind_key(weights, "lambda_c", cfg.weights.lambda_c);
  bind_key(weights, "lambda_p", cfg.weights.lambda_p);
  bind_key(weights, "lambda_B", cfg.weights.lambda_B);

  for (const auto& [key, value] : doc.items()) {
    if (key == "weights") {
      if (!value.is_object()) throw ConfigError(key, "config key 'weights' must be an object");
      for (const auto& [wkey, wvalue] : value.items()) {
        auto it = weights.find(wkey);
        if (it == weights.end()) throw ConfigError("weights." + wkey, "unknown config key 'weights." + wkey + "'");
        it->second(wvalue);
      }
      continue;
    }
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown config key '" + key + "'");
    it->second(value);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open config");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const TrainConfig& c) {
  json doc = {
      {"lr_depth", c.lr_depth},
      {"lr_coeff", c.lr_coeff},
      {"lr_disc", c.lr_disc},
      {"decay_start_epoch", c.decay_start_epoch},
      {"total_epochs", c.total_epochs},
      {"batch_size", c.batch_size},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"weights",
       {{"lambda_g", c.weights.lambda_g},
        {"lambda_c", c.weights.lambda_c},
        {"lambda_p", c.weights.lambda_p},
        {"lambda_B", c.weights.lambda_B}}},
      {"hyp1", c.hyp1},
      {"hyp2", c.hyp2},
      {"seed", c.seed},
      {"pool_size", c.pool_size},
      {"underwater_dir", c.underwater_dir},
      {"terrestrial_dir", c.terrestrial_dir},
      {"image_size", c.image_size},
      {"out_dir", c.out_dir},
      {"depth_channels", c.depth_channels},
      {"residual_blocks", c.residual_blocks},
      {"encoder_channels", c.encoder_channels},
      {"encoder_blocks", c.encoder_blocks},
      {"disc_channels", c.disc_channels},
      {"perceptual_encoder", c.perceptual_encoder},
      {"perceptual_weights", c.perceptual_weights},
      {"perceptual_width", c.perceptual_width},
      {"perceptual_both_directions", c.perceptual_both_directions},
      {"bhat_on_generated", c.bhat_on_generated},
      {"dark_fraction", c.dark_fraction},
      {"dark_cap", c.dark_cap},
      {"sample_every", c.sample_every},
  };
  return doc.dump(2);
}

}  // namespace hybrur
