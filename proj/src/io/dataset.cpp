#include "hyperds/io/dataset.hpp"

#include <fstream>

#include "hyperds/core/error.hpp"

namespace hyperds::io {

using nlohmann::json;

const TensorRecord& RecordBundle::get(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return r;
  throw MissingFileError("record not present in bundle: " + name);
}

bool RecordBundle::has(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return true;
  return false;
}

json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["format_version"] = m.format_version;
  j["meta"] = m.meta;
  json idx = json::array();
  for (const auto& e : m.index) idx.push_back({{"name", e.name}, {"shape", e.shape}});
  j["records"] = idx;
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.format_version = j.at("format_version").get<int>();
  m.meta = j.value("meta", json::object());
  for (const auto& e : j.at("records")) {
    DatasetManifest::Entry entry;
    entry.name = e.at("name").get<std::string>();
    entry.shape = e.at("shape").get<std::vector<std::int64_t>>();
    m.index.push_back(std::move(entry));
  }
  return m;
}

void write_dataset(const std::vector<TensorRecord>& records, const DatasetManifest& manifest,
                   const std::string& dir) {
  if (manifest.index.size() != records.size())
    throw IoError("write_dataset: manifest index does not match record count");
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& e = manifest.index[i];
    const auto& r = records[i];
    if (e.name != r.name || e.shape != r.shape)
      throw IoError("write_dataset: manifest entry disagrees with record " + r.name);
    if (static_cast<std::int64_t>(r.data.size()) != r.element_count())
      throw IoError("write_dataset: record data size mismatch for " + r.name);
    for (size_t k = i + 1; k < records.size(); ++k)
      if (records[k].name == r.name)
        throw IoError("write_dataset: duplicate record name " + r.name);
  }

  DirLock lock(dir);
  const std::filesystem::path root(dir);
  {
    std::ofstream out(root / "manifest");
    if (!out) throw IoError("cannot write manifest in " + dir);
    out << manifest_to_json(manifest).dump(2) << "\n";
  }
  for (const auto& r : records)
    write_f32(root / (r.name + ".f32"), r.data.data(), r.element_count());
}

DatasetManifest read_manifest(const std::string& dir) {
  const std::filesystem::path file = std::filesystem::path(dir) / "manifest";
  std::ifstream in(file);
  if (!in) throw MissingFileError("missing manifest: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("malformed manifest " + file.string() + ": " + e.what());
  }
  const int version = j.value("format_version", -1);
  if (version != kDatasetFormatVersion)
    throw VersionError("unsupported dataset format version " + std::to_string(version) +
                       " in " + file.string());
  return manifest_from_json(j);
}

RecordBundle read_dataset(const std::string& dir) {
  RecordBundle bundle;
  bundle.manifest = read_manifest(dir);  // version checked before any payload read
  const std::filesystem::path root(dir);
  for (const auto& e : bundle.manifest.index) {
    TensorRecord r;
    r.name = e.name;
    r.shape = e.shape;
    r.data = read_f32(root / (e.name + ".f32"), r.element_count());
    bundle.records.push_back(std::move(r));
  }
  return bundle;
}

}  // namespace hyperds::io
