#include "hyperds/io/metrics_csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hyperds/core/error.hpp"

namespace hyperds::io {

namespace {
std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}
}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics csv: " + path);
  out << kMetricsCsvHeader << "\n";
  for (const auto& r : rows)
    out << r.method << "," << r.variable << "," << fmt(r.mse) << "," << fmt(r.mae) << ","
        << r.n_stations << "," << r.n_times << "\n";
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("missing metrics csv: " + path);
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader)
    throw IoError("bad metrics csv header in " + path);
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    MetricsRow r;
    std::getline(ss, r.method, ',');
    std::getline(ss, r.variable, ',');
    std::getline(ss, cell, ',');
    r.mse = std::stod(cell);
    std::getline(ss, cell, ',');
    r.mae = std::stod(cell);
    std::getline(ss, cell, ',');
    r.n_stations = std::stoi(cell);
    std::getline(ss, cell, ',');
    r.n_times = std::stoi(cell);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_curves_csv(const std::string& path, const std::vector<CurveRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write curves csv: " + path);
  out << "epoch,grid_loss,station_loss,val_station_loss\n";
  for (const auto& r : rows)
    out << r.epoch << "," << fmt(r.grid_loss) << "," << fmt(r.station_loss) << ","
        << fmt(r.val_station_loss) << "\n";
}

std::vector<CurveRow> read_curves_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("missing curves csv: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "epoch,grid_loss,station_loss,val_station_loss")
    throw IoError("bad curves csv header in " + path);
  std::vector<CurveRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    CurveRow r;
    std::getline(ss, cell, ',');
    r.epoch = std::stoi(cell);
    std::getline(ss, cell, ',');
    r.grid_loss = std::stod(cell);
    std::getline(ss, cell, ',');
    r.station_loss = std::stod(cell);
    std::getline(ss, cell, ',');
    r.val_station_loss = std::stod(cell);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hyperds::io
