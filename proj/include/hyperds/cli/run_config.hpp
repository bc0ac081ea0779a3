#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "hyperds/baselines/sr.hpp"
#include "hyperds/losses/losses.hpp"
#include "hyperds/model/config.hpp"
#include "hyperds/synth/scenario.hpp"
#include "hyperds/train/trainer.hpp"

namespace hyperds::cli {

// The nested run configuration: every default in the system is representable
// and overridable here. Unknown keys are rejected with their full path.
struct RunConfig {
  synth::ScenarioConfig scenario;
  model::HyperDSConfig model;
  baselines::SRBaselineConfig unet;
  baselines::SRBaselineConfig edsr;
  losses::LossConfig loss;
  train::TrainConfig train;

  RunConfig() {
    unet.arch = "unet";
    edsr.arch = "edsr";
  }
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json run_config_to_json(const RunConfig& cfg);

}  // namespace hyperds::cli
