#pragma once

#include <memory>
#include <nlohmann/json.hpp>

#include "hyperds/baselines/sr.hpp"
#include "hyperds/io/checkpoint.hpp"
#include "hyperds/model/runtime.hpp"
#include "hyperds/train/step.hpp"

namespace hyperds::train {

inline nlohmann::json dims_json(const model::DataDims& d) {
  return {{"V", d.V}, {"Vs", d.Vs}, {"LH", d.LH}, {"LW", d.LW}, {"TH", d.TH},
          {"TW", d.TW}, {"SH", d.SH}, {"SW", d.SW}, {"frames", d.frames},
          {"channels", d.channels}};
}

// Common face of everything the trainer can optimize and the evaluator can
// query. All methods consume the same SampleData and StepOptions: the
// fairness contract between HyperDS and the SR baselines is this interface.
template <class S>
class TrainableModel {
 public:
  virtual ~TrainableModel() = default;
  virtual std::string name() const = 0;
  virtual nlohmann::json config_json() const = 0;
  virtual nn::ParamRegistry<S>& params() = 0;
  virtual int samples_per_pixel() const = 0;
  virtual void begin_batch(int slots) = 0;
  virtual StepResult sample_step(int slot, const SampleData<S>& s, const StepOptions& opt) = 0;
  // normalized (Vs, M) station predictions at arbitrary coordinates
  virtual nn::Mat<S> predict_stations(const SampleData<S>& s,
                                      std::span<const std::array<double, 2>> coords) = 0;
  // normalized high-res grid prediction
  virtual core::FieldGrid predict_grid(const SampleData<S>& s, std::uint64_t seed) = 0;

  io::CheckpointBundle to_checkpoint(int epoch, double val_loss) {
    io::CheckpointBundle b;
    b.model_config = config_json();
    b.model_config["method"] = name();
    b.config_hash = io::config_hash_of(b.model_config);
    b.epoch = epoch;
    b.val_station_loss = val_loss;
    b.params = params().to_records();
    return b;
  }
  void load_checkpoint(const io::CheckpointBundle& b) { params().from_records(b.params); }
};

template <class S>
class HyperDSModel final : public TrainableModel<S> {
 public:
  HyperDSModel(const model::HyperDSConfig& cfg, const model::DataDims& dims,
               std::span<const core::VariableSpec> grid_specs,
               std::span<const core::VariableSpec> station_specs, std::uint64_t seed)
      : model_(cfg, dims, seed),
        composer_(grid_specs, station_specs),
        grid_specs_(grid_specs.begin(), grid_specs.end()),
        station_specs_(station_specs.begin(), station_specs.end()) {}

  std::string name() const override {
    return std::string("hyperds_") + model_.config().variant;
  }
  nlohmann::json config_json() const override {
    nlohmann::json j;
    model::to_json(j, model_.config());
    j["data_dims"] = dims_json(model_.data_dims());
    return j;
  }
  nn::ParamRegistry<S>& params() override { return model_.params(); }
  int samples_per_pixel() const override { return model_.config().samples_per_pixel; }
  void begin_batch(int slots) override { model_.begin_batch(slots); }

  StepResult sample_step(int slot, const SampleData<S>& s, const StepOptions& opt) override {
    return run_sample_step(model_, slot, s, composer_, opt);
  }

  nn::Mat<S> predict_stations(const SampleData<S>& s,
                              std::span<const std::array<double, 2>> coords) override {
    model_.begin_batch(1);
    model_.forward_hyper(0, s.lr, s.sat);
    return model::forward_stations(model_, 0, s.lr_norm, coords, grid_specs_, station_specs_);
  }

  core::FieldGrid predict_grid(const SampleData<S>& s, std::uint64_t seed) override {
    model_.begin_batch(1);
    model_.forward_hyper(0, s.lr, s.sat);
    return model::forward_grid(model_, 0, s.lr_norm, model_.config().samples_per_pixel, seed);
  }

  model::HyperDS<S>& raw() { return model_; }

 private:
  model::HyperDS<S> model_;
  model::StationComposer<S> composer_;
  std::vector<core::VariableSpec> grid_specs_, station_specs_;
};

template <class S>
class SRBaselineModel final : public TrainableModel<S> {
 public:
  SRBaselineModel(const baselines::SRBaselineConfig& cfg, const model::DataDims& dims,
                  std::span<const core::VariableSpec> grid_specs,
                  std::span<const core::VariableSpec> station_specs, std::uint64_t seed)
      : model_(cfg, dims, seed), composer_(grid_specs, station_specs) {}

  std::string name() const override { return model_.config().arch; }
  nlohmann::json config_json() const override {
    const auto& c = model_.config();
    nlohmann::json j{{"arch", c.arch},         {"upscale", c.upscale},
                     {"obs_concat", c.obs_concat}, {"sat_enc_channels", c.sat_enc_channels},
                     {"unet_base", c.unet_base},   {"edsr_blocks", c.edsr_blocks},
                     {"edsr_width", c.edsr_width}};
    j["data_dims"] = dims_json(model_.data_dims());
    return j;
  }
  nn::ParamRegistry<S>& params() override { return model_.params(); }
  int samples_per_pixel() const override { return 1; }
  void begin_batch(int slots) override { model_.begin_batch(slots); }

  StepResult sample_step(int slot, const SampleData<S>& s, const StepOptions& opt) override {
    return baselines::run_sr_sample_step(model_, slot, s, composer_, opt);
  }

  nn::Mat<S> predict_stations(const SampleData<S>& s,
                              std::span<const std::array<double, 2>> coords) override {
    model_.begin_batch(1);
    nn::Mat<S> pred = model_.forward(0, s.lr, s.sat);
    const auto& dims = model_.data_dims();
    core::FieldGrid hr_proto(s.lr_norm.domain, core::Resolution::High, dims.V);
    const auto stencils = core::bilinear_stencils(hr_proto, coords);
    nn::Mat<S> dec(dims.V, static_cast<Eigen::Index>(coords.size()));
    for (size_t m = 0; m < coords.size(); ++m) {
      dec.col(static_cast<Eigen::Index>(m)).setZero();
      for (int k = 0; k < 4; ++k)
        dec.col(static_cast<Eigen::Index>(m)) +=
            static_cast<S>(stencils[m].w[k]) * pred.col(stencils[m].idx[k]);
    }
    return composer_.forward(dec);
  }

  core::FieldGrid predict_grid(const SampleData<S>& s, std::uint64_t) override {
    model_.begin_batch(1);
    nn::Mat<S> pred = model_.forward(0, s.lr, s.sat);
    const auto& dims = model_.data_dims();
    core::FieldGrid g(s.lr_norm.domain, core::Resolution::High, dims.V);
    for (int v = 0; v < dims.V; ++v)
      for (int i = 0; i < dims.TH; ++i)
        for (int j = 0; j < dims.TW; ++j)
          g.at(v, i, j) = static_cast<double>(pred(v, static_cast<Eigen::Index>(i) * dims.TW + j));
    return g;
  }

 private:
  baselines::SRModel<S> model_;
  model::StationComposer<S> composer_;
};

}  // namespace hyperds::train
