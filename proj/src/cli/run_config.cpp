#include "hyperds/cli/run_config.hpp"

#include <fstream>
#include <set>

namespace hyperds::model {

using nlohmann::json;

void to_json(json& j, const HyperDSConfig& c) {
  j = json{{"feature_channels", c.feature_channels},
           {"feat_h", c.feat_h},
           {"feat_w", c.feat_w},
           {"field_width", c.field_width},
           {"sat_width", c.sat_width},
           {"encoder_stages", c.encoder_stages},
           {"sat_input_pool", c.sat_input_pool},
           {"self_layers", c.self_layers},
           {"cross_layers", c.cross_layers},
           {"heads", c.heads},
           {"ffn_ratio", c.ffn_ratio},
           {"cross_query", c.cross_query},
           {"variant", c.variant},
           {"blocks_x", c.blocks_x},
           {"blocks_y", c.blocks_y},
           {"mlp_depth", c.mlp_depth},
           {"mlp_hidden", c.mlp_hidden},
           {"generated_layers", c.generated_layers},
           {"samples_per_pixel", c.samples_per_pixel},
           {"fourier_freqs", c.fourier_freqs}};
}

void from_json(const json& j, HyperDSConfig& c) {
  c.feature_channels = j.value("feature_channels", c.feature_channels);
  c.feat_h = j.value("feat_h", c.feat_h);
  c.feat_w = j.value("feat_w", c.feat_w);
  c.field_width = j.value("field_width", c.field_width);
  c.sat_width = j.value("sat_width", c.sat_width);
  c.encoder_stages = j.value("encoder_stages", c.encoder_stages);
  c.sat_input_pool = j.value("sat_input_pool", c.sat_input_pool);
  c.self_layers = j.value("self_layers", c.self_layers);
  c.cross_layers = j.value("cross_layers", c.cross_layers);
  c.heads = j.value("heads", c.heads);
  c.ffn_ratio = j.value("ffn_ratio", c.ffn_ratio);
  c.cross_query = j.value("cross_query", c.cross_query);
  c.variant = j.value("variant", c.variant);
  c.blocks_x = j.value("blocks_x", c.blocks_x);
  c.blocks_y = j.value("blocks_y", c.blocks_y);
  c.mlp_depth = j.value("mlp_depth", c.mlp_depth);
  c.mlp_hidden = j.value("mlp_hidden", c.mlp_hidden);
  c.generated_layers = j.value("generated_layers", c.generated_layers);
  c.samples_per_pixel = j.value("samples_per_pixel", c.samples_per_pixel);
  c.fourier_freqs = j.value("fourier_freqs", c.fourier_freqs);
}

}  // namespace hyperds::model

namespace hyperds::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& path) {
  if (!j.is_object()) throw ConfigError("config: " + path + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("config: unknown key '" + path + it.key() + "'");
}

void parse_domain(const json& j, core::DomainSpec& d) {
  reject_unknown(j, {"lon_min", "lon_max", "lat_min", "lat_max", "cell_low", "cell_high"},
                 "scenario.domain.");
  d.lon_min = j.value("lon_min", d.lon_min);
  d.lon_max = j.value("lon_max", d.lon_max);
  d.lat_min = j.value("lat_min", d.lat_min);
  d.lat_max = j.value("lat_max", d.lat_max);
  d.cell_low = j.value("cell_low", d.cell_low);
  d.cell_high = j.value("cell_high", d.cell_high);
}

void parse_scenario(const json& j, synth::ScenarioConfig& c) {
  reject_unknown(j,
                 {"seed", "domain", "modes_per_variable", "detail_scale", "sat_res_factor",
                  "t_train", "t_val", "t_test", "n_train", "n_val", "n_test", "sigma_obs",
                  "bias_std", "obs_dropout"},
                 "scenario.");
  c.seed = j.value("seed", c.seed);
  if (j.contains("domain")) parse_domain(j.at("domain"), c.domain);
  c.modes_per_variable = j.value("modes_per_variable", c.modes_per_variable);
  c.detail_scale = j.value("detail_scale", c.detail_scale);
  c.sat_res_factor = j.value("sat_res_factor", c.sat_res_factor);
  c.t_train = j.value("t_train", c.t_train);
  c.t_val = j.value("t_val", c.t_val);
  c.t_test = j.value("t_test", c.t_test);
  c.n_train = j.value("n_train", c.n_train);
  c.n_val = j.value("n_val", c.n_val);
  c.n_test = j.value("n_test", c.n_test);
  c.sigma_obs = j.value("sigma_obs", c.sigma_obs);
  if (j.contains("bias_std")) {
    const auto& b = j.at("bias_std");
    if (!b.is_array() || b.size() != 4)
      throw ConfigError("config: scenario.bias_std must be an array of 4 values");
    for (int i = 0; i < 4; ++i) c.bias_std[i] = b[i].get<double>();
  }
  c.obs_dropout = j.value("obs_dropout", c.obs_dropout);
}

void parse_model(const json& j, model::HyperDSConfig& c) {
  reject_unknown(j,
                 {"feature_channels", "feat_h", "feat_w", "field_width", "sat_width",
                  "encoder_stages", "sat_input_pool", "self_layers", "cross_layers", "heads",
                  "ffn_ratio", "cross_query", "variant", "blocks_x", "blocks_y", "mlp_depth",
                  "mlp_hidden", "generated_layers", "samples_per_pixel", "fourier_freqs"},
                 "model.");
  model::from_json(j, c);
}

void parse_sr(const json& j, baselines::SRBaselineConfig& c, const std::string& which) {
  reject_unknown(j,
                 {"upscale", "obs_concat", "sat_enc_channels", "unet_base", "edsr_blocks",
                  "edsr_width"},
                 "baselines." + which + ".");
  c.upscale = j.value("upscale", c.upscale);
  c.obs_concat = j.value("obs_concat", c.obs_concat);
  c.sat_enc_channels = j.value("sat_enc_channels", c.sat_enc_channels);
  c.unet_base = j.value("unet_base", c.unet_base);
  c.edsr_blocks = j.value("edsr_blocks", c.edsr_blocks);
  c.edsr_width = j.value("edsr_width", c.edsr_width);
}

void parse_loss(const json& j, losses::LossConfig& c) {
  reject_unknown(j, {"beta", "hr_supervision"}, "loss.");
  c.beta = j.value("beta", c.beta);
  c.hr_supervision = j.value("hr_supervision", c.hr_supervision);
}

void parse_train(const json& j, train::TrainConfig& c) {
  reject_unknown(j,
                 {"epochs", "lr", "lr_min", "restart_period", "batch_size", "seed", "clip_norm",
                  "pixel_fraction"},
                 "train.");
  c.epochs = j.value("epochs", c.epochs);
  c.lr = j.value("lr", c.lr);
  c.lr_min = j.value("lr_min", c.lr_min);
  c.restart_period = j.value("restart_period", c.restart_period);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.seed = j.value("seed", c.seed);
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.pixel_fraction = j.value("pixel_fraction", c.pixel_fraction);
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  reject_unknown(j, {"scenario", "model", "baselines", "loss", "train"}, "");
  RunConfig cfg;
  if (j.contains("scenario")) parse_scenario(j.at("scenario"), cfg.scenario);
  if (j.contains("model")) parse_model(j.at("model"), cfg.model);
  if (j.contains("baselines")) {
    reject_unknown(j.at("baselines"), {"unet", "edsr"}, "baselines.");
    if (j.at("baselines").contains("unet")) parse_sr(j.at("baselines").at("unet"), cfg.unet, "unet");
    if (j.at("baselines").contains("edsr")) parse_sr(j.at("baselines").at("edsr"), cfg.edsr, "edsr");
  }
  if (j.contains("loss")) parse_loss(j.at("loss"), cfg.loss);
  if (j.contains("train")) parse_train(j.at("train"), cfg.train);
  // cross-section consistency: the trainer carries the loss settings
  cfg.train.beta = cfg.loss.beta;
  cfg.train.hr_supervision = cfg.loss.hr_supervision;
  cfg.scenario.validate();
  cfg.loss.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("missing config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  try {
    return parse_run_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()) + " (in " + path + ")");
  }
}

json run_config_to_json(const RunConfig& cfg) {
  json j;
  j["scenario"] = {{"seed", cfg.scenario.seed},
                   {"domain",
                    {{"lon_min", cfg.scenario.domain.lon_min},
                     {"lon_max", cfg.scenario.domain.lon_max},
                     {"lat_min", cfg.scenario.domain.lat_min},
                     {"lat_max", cfg.scenario.domain.lat_max},
                     {"cell_low", cfg.scenario.domain.cell_low},
                     {"cell_high", cfg.scenario.domain.cell_high}}},
                   {"modes_per_variable", cfg.scenario.modes_per_variable},
                   {"detail_scale", cfg.scenario.detail_scale},
                   {"sat_res_factor", cfg.scenario.sat_res_factor},
                   {"t_train", cfg.scenario.t_train},
                   {"t_val", cfg.scenario.t_val},
                   {"t_test", cfg.scenario.t_test},
                   {"n_train", cfg.scenario.n_train},
                   {"n_val", cfg.scenario.n_val},
                   {"n_test", cfg.scenario.n_test},
                   {"sigma_obs", cfg.scenario.sigma_obs},
                   {"bias_std", cfg.scenario.bias_std},
                   {"obs_dropout", cfg.scenario.obs_dropout}};
  model::to_json(j["model"], cfg.model);
  auto sr_json = [](const baselines::SRBaselineConfig& c) {
    return json{{"upscale", c.upscale},
                {"obs_concat", c.obs_concat},
                {"sat_enc_channels", c.sat_enc_channels},
                {"unet_base", c.unet_base},
                {"edsr_blocks", c.edsr_blocks},
                {"edsr_width", c.edsr_width}};
  };
  j["baselines"] = {{"unet", sr_json(cfg.unet)}, {"edsr", sr_json(cfg.edsr)}};
  j["loss"] = {{"beta", cfg.loss.beta}, {"hr_supervision", cfg.loss.hr_supervision}};
  j["train"] = {{"epochs", cfg.train.epochs},
                {"lr", cfg.train.lr},
                {"lr_min", cfg.train.lr_min},
                {"restart_period", cfg.train.restart_period},
                {"batch_size", cfg.train.batch_size},
                {"seed", cfg.train.seed},
                {"clip_norm", cfg.train.clip_norm},
                {"pixel_fraction", cfg.train.pixel_fraction}};
  return j;
}

}  // namespace hyperds::cli
