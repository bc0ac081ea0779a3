#pragma once

#include <string>
#include <vector>

namespace hyperds::io {

inline constexpr const char* kMetricsCsvHeader = "method,variable,mse,mae,n_stations,n_times";

struct MetricsRow {
  std::string method;
  std::string variable;
  double mse = 0.0;
  double mae = 0.0;
  int n_stations = 0;
  int n_times = 0;
};

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

// Loss-curve CSV: epoch,grid_loss,station_loss,val_station_loss
struct CurveRow {
  int epoch = 0;
  double grid_loss = 0.0;
  double station_loss = 0.0;
  double val_station_loss = 0.0;
};

void write_curves_csv(const std::string& path, const std::vector<CurveRow>& rows);
std::vector<CurveRow> read_curves_csv(const std::string& path);

}  // namespace hyperds::io
