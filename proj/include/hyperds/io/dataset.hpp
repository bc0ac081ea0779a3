#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hyperds/io/tensor_record.hpp"

namespace hyperds::io {

inline constexpr int kDatasetFormatVersion = 1;

// Directory layout: one structured-text file named `manifest` (JSON) plus one
// `<name>.f32` payload per record. Readable from any language.
struct DatasetManifest {
  int format_version = kDatasetFormatVersion;
  nlohmann::json meta;  // domain, variables, splits, scenario echo, shapes
  struct Entry {
    std::string name;
    std::vector<std::int64_t> shape;
  };
  std::vector<Entry> index;
};

struct RecordBundle {
  DatasetManifest manifest;
  std::vector<TensorRecord> records;

  const TensorRecord& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

// write verifies manifest/record consistency, takes the directory lock, and
// emits payloads in index order so identical inputs give identical bytes.
void write_dataset(const std::vector<TensorRecord>& records, const DatasetManifest& manifest,
                   const std::string& dir);

// read validates the version before touching any payload, then loads every
// indexed record, checking existence and byte length per file.
RecordBundle read_dataset(const std::string& dir);

// Manifest-only load (cheap inspection).
DatasetManifest read_manifest(const std::string& dir);

nlohmann::json manifest_to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

}  // namespace hyperds::io
