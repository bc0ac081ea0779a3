#pragma once

#include <nlohmann/json.hpp>

#include "hyperds/model/config.hpp"
#include "hyperds/train/step.hpp"

namespace hyperds::train {

using core::Split;

// Counters for protocol-integrity checks: training must leave every test
// counter at zero.
struct AccessLog {
  long test_station_reads = 0;
  long test_time_reads = 0;
  bool test_untouched() const { return test_station_reads == 0 && test_time_reads == 0; }
};

struct StationsAt {
  std::vector<std::array<double, 2>> coords;
  nn::Mat<float> values_norm;  // (Vs, M_split)
  std::vector<std::uint8_t> valid;
  std::vector<int> station_ids;  // indices into the full station table
};

// In-memory dataset with normalization and test-access logging. Values are
// stored in physical units on disk; the view hands out normalized data.
class DatasetView {
 public:
  static DatasetView load(const std::string& dir);

  const model::DataDims& dims() const { return dims_; }
  const core::DomainSpec& domain() const { return domain_; }
  const std::vector<core::VariableSpec>& grid_specs() const { return grid_specs_; }
  const std::vector<core::VariableSpec>& station_specs() const { return station_specs_; }
  const nlohmann::json& meta() const { return meta_; }
  double sigma_obs() const { return sigma_obs_; }

  int time_count() const { return t_total_; }
  std::vector<int> time_indices(Split s) const;
  Split split_of_time(int t) const;

  // Assembled model inputs (and HR labels when wanted) for one time step.
  // hr is left null when with_hr is false.
  SampleData<float> sample(int t, Split station_split, bool with_hr) const;
  const nn::Mat<float>& hr_norm(int t) const;

  StationsAt stations_at(int t, Split split) const;

  // noiseless (bias-kept) station values, the truth-as-prediction reference
  StationsAt clean_stations_at(int t, Split split) const;

  // physical-unit grids for the interpolation baselines
  core::FieldGrid lr_grid_phys(int t) const;
  core::FieldGrid hr_grid_phys(int t) const;
  core::FieldGrid lr_grid_norm(int t) const;

  // physical-unit station bias table (Vs, M), diagnostics
  const std::vector<float>& station_bias() const { return bias_; }
  const std::vector<std::array<double, 2>>& all_station_coords() const { return coords_; }
  const std::vector<Split>& station_splits() const { return splits_; }

  AccessLog& log() const { return log_; }
  void reset_log() const { log_ = AccessLog{}; }

 private:
  void note_time(int t) const;

  model::DataDims dims_;
  core::DomainSpec domain_;
  std::vector<core::VariableSpec> grid_specs_, station_specs_;
  nlohmann::json meta_;
  double sigma_obs_ = 0.0;
  int t_total_ = 0, t_train_ = 0, t_val_ = 0, t_test_ = 0;

  std::vector<float> lr_, hr_, sat_, obs_, clean_, valid_, bias_;
  mutable std::vector<nn::Mat<float>> hr_norm_cache_;
  std::vector<std::array<double, 2>> coords_;
  std::vector<Split> splits_;

  mutable AccessLog log_;
};

}  // namespace hyperds::train
