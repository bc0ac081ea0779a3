#pragma once

#include <memory>

#include "hyperds/train/dataset_view.hpp"
#include "hyperds/train/model_iface.hpp"

namespace hyperds::train {

// method: "hyperds" (cfg.variant decides the decoder), "unet" or "edsr".
inline std::unique_ptr<TrainableModel<float>> make_model(
    const std::string& method, const model::HyperDSConfig& hyperds_cfg,
    const baselines::SRBaselineConfig& unet_cfg, const baselines::SRBaselineConfig& edsr_cfg,
    const DatasetView& data, std::uint64_t seed) {
  const auto& dims = data.dims();
  if (method == "hyperds")
    return std::make_unique<HyperDSModel<float>>(hyperds_cfg, dims, data.grid_specs(),
                                                 data.station_specs(), seed);
  if (method == "unet") {
    auto cfg = unet_cfg;
    cfg.arch = "unet";
    cfg.upscale = dims.factor();
    return std::make_unique<SRBaselineModel<float>>(cfg, dims, data.grid_specs(),
                                                    data.station_specs(), seed);
  }
  if (method == "edsr") {
    auto cfg = edsr_cfg;
    cfg.arch = "edsr";
    cfg.upscale = dims.factor();
    return std::make_unique<SRBaselineModel<float>>(cfg, dims, data.grid_specs(),
                                                    data.station_specs(), seed);
  }
  throw ConfigError("unknown method: " + method + " (expected hyperds, unet or edsr)");
}

// Rebuilds the model a checkpoint was trained with and loads its parameters.
// Shape disagreements with the dataset surface as config-mismatch errors.
inline std::unique_ptr<TrainableModel<float>> model_from_checkpoint(
    const io::CheckpointBundle& bundle, const DatasetView& data) {
  const auto& j = bundle.model_config;
  const std::string method = j.at("method").get<std::string>();
  if (j.contains("data_dims") && j.at("data_dims") != dims_json(data.dims()))
    throw ConfigError("checkpoint/dataset mismatch: the checkpoint was trained on different "
                      "data shapes");
  std::unique_ptr<TrainableModel<float>> m;
  if (method.rfind("hyperds", 0) == 0) {
    model::HyperDSConfig cfg;
    model::from_json(j, cfg);
    m = std::make_unique<HyperDSModel<float>>(cfg, data.dims(), data.grid_specs(),
                                              data.station_specs(), 0);
  } else {
    baselines::SRBaselineConfig cfg;
    cfg.arch = j.at("arch").get<std::string>();
    cfg.upscale = j.at("upscale").get<int>();
    cfg.obs_concat = j.at("obs_concat").get<bool>();
    cfg.sat_enc_channels = j.at("sat_enc_channels").get<int>();
    cfg.unet_base = j.at("unet_base").get<int>();
    cfg.edsr_blocks = j.at("edsr_blocks").get<int>();
    cfg.edsr_width = j.at("edsr_width").get<int>();
    m = std::make_unique<SRBaselineModel<float>>(cfg, data.dims(), data.grid_specs(),
                                                 data.station_specs(), 0);
  }
  m->load_checkpoint(bundle);
  return m;
}

}  // namespace hyperds::train
