#pragma once

#include "hyperds/io/checkpoint.hpp"
#include "hyperds/io/metrics_csv.hpp"
#include "hyperds/train/dataset_view.hpp"
#include "hyperds/train/model_iface.hpp"

namespace hyperds::train {

struct TrainConfig {
  int epochs = 50;
  double lr = 1e-4;
  double lr_min = 1e-6;
  int restart_period = 10;  // cosine warm-restart period, epochs
  int batch_size = 8;
  std::uint64_t seed = 1;
  bool hr_supervision = true;
  double beta = 0.05;
  double clip_norm = 1.0;
  double pixel_fraction = 1.0;  // fraction of high-res pixels supervised per step

  void validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (!(lr > 0.0)) throw ConfigError("train: lr must be > 0");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (restart_period < 1) throw ConfigError("train: restart_period must be >= 1");
    if (beta < 0.0) throw ConfigError("train: beta must be >= 0");
    if (pixel_fraction <= 0.0 || pixel_fraction > 1.0)
      throw ConfigError("train: pixel_fraction must be in (0, 1]");
  }
};

struct TrainOutput {
  io::CheckpointBundle best;  // epoch with the minimum validation station loss
  std::vector<io::CurveRow> curves;
};

// Runs the schedule, evaluates the validation station loss each epoch, keeps
// the argmin checkpoint, and verifies that no test-split data was touched.
TrainOutput train(TrainableModel<float>& model, const DatasetView& data, const TrainConfig& cfg);

// Normalized station MSE of the model over (time_split x station_split).
double station_split_loss(TrainableModel<float>& model, const DatasetView& data,
                          Split time_split, Split station_split);

}  // namespace hyperds::train
