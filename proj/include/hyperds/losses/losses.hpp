#pragma once

#include <span>
#include <utility>
#include <vector>

#include "hyperds/core/grid_ops.hpp"

namespace hyperds::losses {

using core::FieldGrid;
using core::StationSet;

struct LossConfig {
  double beta = 0.05;          // station-loss coefficient
  bool hr_supervision = true;  // false: replace grid loss with the no-HR form

  void validate() const {
    if (beta < 0.0) throw ConfigError("loss: beta must be >= 0");
  }
};

// Mean squared error over all (v, i, j).
double grid_loss(const FieldGrid& pred, const FieldGrid& label);

// No-HR-supervision grid loss: MSE(upsampled input, pred) + MSE(input,
// downsampled pred). Both terms unweighted.
double grid_loss_no_hr(const FieldGrid& pred, const FieldGrid& input_lr);

// Masked MSE over valid (variable, station) entries; all-invalid is an error.
double station_loss(std::span<const double> pred, const StationSet& label);

double total_loss(double grid, double station, const LossConfig& cfg);

// Eq.-2 style metrics over stations x times for one variable.
// pred/truth are (n) flattened; mask may be empty (all valid).
std::pair<double, double> mse_mae(std::span<const double> pred, std::span<const double> truth,
                                  std::span<const std::uint8_t> mask = {});

}  // namespace hyperds::losses
