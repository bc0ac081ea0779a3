#pragma once

#include <limits>

#include "hyperds/train/trainer.hpp"

namespace hyperds::train {

// Station-scale evaluation of one method on one split. MSE/MAE are reported
// in normalized (per-variable z-score) units.
struct EvalReport {
  std::string method;
  std::string split;
  std::vector<io::MetricsRow> rows;  // one per station variable
  nn::Mat<double> per_station_mse;   // (Vs, M_split), normalized
  std::vector<std::array<double, 2>> coords;
  std::vector<int> station_ids;
  core::FieldGrid grid_pred_mean;  // normalized, averaged over the split's times
  double grid_mse = std::numeric_limits<double>::quiet_NaN();  // vs HR labels
  int n_stations = 0, n_times = 0;
  std::vector<core::VariableSpec> grid_specs, station_specs;
};

EvalReport evaluate_model(TrainableModel<float>& model, const DatasetView& data, Split split,
                          std::uint64_t seed);

// Interpolation baselines: bilinear interpolation of the input field (Low)
// or of the high-res label field (High) at the stations.
EvalReport evaluate_interp(const DatasetView& data, core::Resolution source, Split split);

// Noise-floor reference: noiseless biased station values as predictions.
EvalReport evaluate_truth(const DatasetView& data, Split split);

void write_report(const EvalReport& report, const std::string& dir);
EvalReport read_report(const std::string& dir);

// Consolidated comparison: merged metric rows plus a per-variable ranking by
// MSE (rank 1 = lowest).
struct RankingRow {
  std::string variable;
  int rank = 0;
  std::string method;
  double mse = 0.0;
};
struct CompareOutput {
  std::vector<io::MetricsRow> rows;
  std::vector<RankingRow> ranking;
};
CompareOutput compare_methods(const std::vector<EvalReport>& reports);
void write_ranking_csv(const std::string& path, const std::vector<RankingRow>& rows);
std::vector<RankingRow> read_ranking_csv(const std::string& path);

}  // namespace hyperds::train
