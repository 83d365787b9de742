#include <filesystem>
#include <sstream>

#include "hybrur/errors.hpp"
#include "hybrur/trainer.hpp"

namespace hybrur {

namespace {

constexpr int64_t kFormatVersion = 1;

void save_pool(torch::serialize::OutputArchive& ar, const ImagePool& pool) {
  ar.write("size", c10::IValue(static_cast<int64_t>(pool.images().size())));
  for (std::size_t i = 0; i < pool.images().size(); ++i) ar.write("image_" + std::to_string(i), pool.images()[i]);
}

void load_pool(torch::serialize::InputArchive& ar, ImagePool& pool) {
  c10::IValue size;
  ar.read("size", size);
  std::vector<torch::Tensor> images(static_cast<std::size_t>(size.toInt()));
  for (std::size_t i = 0; i < images.size(); ++i) ar.read("image_" + std::to_string(i), images[i]);
  pool.set_images(std::move(images));
}

int64_t read_int(torch::serialize::InputArchive& ar, const std::string& key) {
  c10::IValue v;
  ar.read(key, v);
  return v.toInt();
}

std::string read_string(torch::serialize::InputArchive& ar, const std::string& key) {
  c10::IValue v;
  ar.read(key, v);
  return v.toStringRef();
}

template <typename M>
void save_sub(torch::serialize::OutputArchive& root, const std::string& key, const M& m) {
  torch::serialize::OutputArchive sub;
  m.save(sub);
  root.write(key, sub);
}

template <typename M>
void load_sub(torch::serialize::InputArchive& root, const std::string& key, M& m) {
  torch::serialize::InputArchive sub;
  root.read(key, sub);
  m.load(sub);
}

}  // namespace

void save_checkpoint(const TrainState& st, const std::filesystem::path& path) {
  torch::serialize::OutputArchive ar;
  ar.write("format_version", c10::IValue(kFormatVersion));
  ar.write("epoch", c10::IValue(st.epoch));
  ar.write("iteration", c10::IValue(st.iteration));
  ar.write("epoch_iteration", c10::IValue(st.epoch_iteration));
  ar.write("config", c10::IValue(to_json(st.cfg)));
  std::ostringstream rng;
  rng << st.rng;
  ar.write("rng", c10::IValue(rng.str()));

  save_sub(ar, "G", *st.G);
  save_sub(ar, "F", *st.F);
  save_sub(ar, "D_underwater", *st.D_underwater);
  save_sub(ar, "D_terrestrial", *st.D_terrestrial);
  save_sub(ar, "opt_generators", *st.opt_generators);
  save_sub(ar, "opt_d_underwater", *st.opt_d_underwater);
  save_sub(ar, "opt_d_terrestrial", *st.opt_d_terrestrial);

  torch::serialize::OutputArchive pu, pt;
  save_pool(pu, st.pool_underwater);
  save_pool(pt, st.pool_terrestrial);
  ar.write("pool_underwater", pu);
  ar.write("pool_terrestrial", pt);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  try {
    ar.save_to(tmp.string());
  } catch (const c10::Error& e) {
    throw IoError(path.string(), std::string("cannot write checkpoint: ") + e.what_without_backtrace());
  }
  std::filesystem::rename(tmp, path);
}

std::unique_ptr<TrainState> load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError(path.string(), "checkpoint does not exist");
  torch::serialize::InputArchive ar;
  try {
    ar.load_from(path.string());
  } catch (const c10::Error& e) {
    throw IoError(path.string(), std::string("cannot read checkpoint: ") + e.what_without_backtrace());
  }
  if (read_int(ar, "format_version") != kFormatVersion)
    throw IoError(path.string(), "unsupported checkpoint format");

  auto st = std::make_unique<TrainState>(parse_config(read_string(ar, "config")));
  st->epoch = read_int(ar, "epoch");
  st->iteration = read_int(ar, "iteration");
  st->epoch_iteration = read_int(ar, "epoch_iteration");
  std::istringstream rng(read_string(ar, "rng"));
  rng >> st->rng;

  try {
    load_sub(ar, "G", *st->G);
    load_sub(ar, "F", *st->F);
    load_sub(ar, "D_underwater", *st->D_underwater);
    load_sub(ar, "D_terrestrial", *st->D_terrestrial);
    load_sub(ar, "opt_generators", *st->opt_generators);
    load_sub(ar, "opt_d_underwater", *st->opt_d_underwater);
    load_sub(ar, "opt_d_terrestrial", *st->opt_d_terrestrial);
    torch::serialize::InputArchive pu, pt;
    ar.read("pool_underwater", pu);
    ar.read("pool_terrestrial", pt);
    load_pool(pu, st->pool_underwater);
    load_pool(pt, st->pool_terrestrial);
  } catch (const c10::Error& e) {
    throw IoError(path.string(), std::string("incompatible checkpoint: ") + e.what_without_backtrace());
  }
  return st;
}

}  // namespace hybrur
