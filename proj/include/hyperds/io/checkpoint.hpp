#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "hyperds/io/tensor_record.hpp"

namespace hyperds::io {

// Model parameters plus the metadata needed to reload and to rank
// checkpoints by validation station loss. Same directory layout as datasets.
struct CheckpointBundle {
  nlohmann::json model_config;
  std::string config_hash;
  int epoch = 0;
  double val_station_loss = 0.0;
  std::vector<TensorRecord> params;

  const TensorRecord& param(const std::string& name) const;
};

std::string config_hash_of(const nlohmann::json& config);

void write_checkpoint(const CheckpointBundle& bundle, const std::string& dir);
CheckpointBundle read_checkpoint(const std::string& dir);

}  // namespace hyperds::io
