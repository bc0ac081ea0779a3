#include "hyperds/io/checkpoint.hpp"

#include <cinttypes>
#include <fstream>

#include "hyperds/core/error.hpp"
#include "hyperds/core/rng.hpp"

namespace hyperds::io {

using nlohmann::json;

const TensorRecord& CheckpointBundle::param(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return p;
  throw BundleSchemaError("checkpoint is missing parameter: " + name);
}

std::string config_hash_of(const json& config) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a(config.dump()));
  return buf;
}

void write_checkpoint(const CheckpointBundle& bundle, const std::string& dir) {
  DirLock lock(dir);
  const std::filesystem::path root(dir);
  json j;
  j["format_version"] = 1;
  j["kind"] = "checkpoint";
  j["model_config"] = bundle.model_config;
  j["config_hash"] = bundle.config_hash;
  j["epoch"] = bundle.epoch;
  j["val_station_loss"] = bundle.val_station_loss;
  json idx = json::array();
  for (const auto& p : bundle.params) idx.push_back({{"name", p.name}, {"shape", p.shape}});
  j["params"] = idx;
  {
    std::ofstream out(root / "manifest");
    if (!out) throw IoError("cannot write checkpoint manifest in " + dir);
    out << j.dump(2) << "\n";
  }
  for (const auto& p : bundle.params)
    write_f32(root / (p.name + ".f32"), p.data.data(), p.element_count());
}

CheckpointBundle read_checkpoint(const std::string& dir) {
  const std::filesystem::path root(dir);
  std::ifstream in(root / "manifest");
  if (!in) throw MissingFileError("missing checkpoint manifest: " + (root / "manifest").string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  const int version = j.value("format_version", -1);
  if (version != 1)
    throw VersionError("unsupported checkpoint format version " + std::to_string(version));
  if (j.value("kind", "") != "checkpoint")
    throw BundleSchemaError("not a checkpoint directory: " + dir);

  CheckpointBundle bundle;
  bundle.model_config = j.at("model_config");
  bundle.config_hash = j.at("config_hash").get<std::string>();
  bundle.epoch = j.at("epoch").get<int>();
  bundle.val_station_loss = j.at("val_station_loss").get<double>();
  for (const auto& e : j.at("params")) {
    TensorRecord p;
    p.name = e.at("name").get<std::string>();
    p.shape = e.at("shape").get<std::vector<std::int64_t>>();
    p.data = read_f32(root / (p.name + ".f32"), p.element_count());
    bundle.params.push_back(std::move(p));
  }
  return bundle;
}

}  // namespace hyperds::io
