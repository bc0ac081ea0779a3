#include "hyperds/train/evaluate.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "hyperds/baselines/interp.hpp"
#include "hyperds/io/dataset.hpp"

namespace hyperds::train {

namespace {

// Accumulates per-(variable, station) squared/absolute errors over time.
struct Accumulator {
  explicit Accumulator(const DatasetView& data, Split split)
      : data_(data) {
    // station roster of the split, from the first split time step
    const auto times = data.time_indices(split);
    if (times.empty()) throw DegenerateLossError("evaluate: empty time split");
    t0_ = times.front();
    auto st = data.stations_at(t0_, split);
    ids_ = st.station_ids;
    coords_ = st.coords;
    const int Vs = data.dims().Vs;
    const int M = static_cast<int>(ids_.size());
    if (M == 0) throw DegenerateLossError("evaluate: empty station split");
    se_ = nn::Mat<double>::Zero(Vs, M);
    ae_ = nn::Mat<double>::Zero(Vs, M);
    count_ = nn::Mat<double>::Zero(Vs, M);
  }

  void add(const StationsAt& obs, const nn::Mat<float>& pred) {
    const int Vs = static_cast<int>(pred.rows());
    const int M = static_cast<int>(pred.cols());
    for (int v = 0; v < Vs; ++v)
      for (int m = 0; m < M; ++m) {
        if (!obs.valid[static_cast<size_t>(v) * M + m]) continue;
        const double d =
            static_cast<double>(pred(v, m)) - static_cast<double>(obs.values_norm(v, m));
        se_(v, m) += d * d;
        ae_(v, m) += std::abs(d);
        count_(v, m) += 1.0;
      }
    ++n_times_;
  }

  EvalReport finish(const std::string& method, Split split) const {
    EvalReport rep;
    rep.method = method;
    rep.split = core::split_name(split);
    const int Vs = static_cast<int>(se_.rows());
    const int M = static_cast<int>(se_.cols());
    rep.per_station_mse.resize(Vs, M);
    for (int v = 0; v < Vs; ++v) {
      double se = 0.0, ae = 0.0, n = 0.0;
      for (int m = 0; m < M; ++m) {
        rep.per_station_mse(v, m) = count_(v, m) > 0 ? se_(v, m) / count_(v, m) : 0.0;
        se += se_(v, m);
        ae += ae_(v, m);
        n += count_(v, m);
      }
      if (n == 0) throw DegenerateLossError("evaluate: no valid entries for a variable");
      io::MetricsRow row;
      row.method = method;
      row.variable = data_.station_specs()[v].short_name;
      row.mse = se / n;
      row.mae = ae / n;
      row.n_stations = M;
      row.n_times = n_times_;
      rep.rows.push_back(row);
    }
    rep.coords = coords_;
    rep.station_ids = ids_;
    rep.n_stations = M;
    rep.n_times = n_times_;
    rep.grid_specs = data_.grid_specs();
    rep.station_specs = data_.station_specs();
    return rep;
  }

  const DatasetView& data_;
  int t0_ = 0;
  std::vector<int> ids_;
  std::vector<std::array<double, 2>> coords_;
  nn::Mat<double> se_, ae_, count_;
  int n_times_ = 0;
};

void add_grid_mean(core::FieldGrid& mean, const core::FieldGrid& g, int n_total) {
  if (mean.values.empty()) {
    mean = g;
    for (auto& x : mean.values) x /= n_total;
  } else {
    for (size_t i = 0; i < mean.values.size(); ++i) mean.values[i] += g.values[i] / n_total;
  }
}

}  // namespace

EvalReport evaluate_model(TrainableModel<float>& model, const DatasetView& data, Split split,
                          std::uint64_t seed) {
  Accumulator acc(data, split);
  const auto times = data.time_indices(split);
  core::FieldGrid mean_grid;
  double grid_se = 0.0;
  long grid_n = 0;
  for (int t : times) {
    SampleData<float> s = data.sample(t, split, false);
    auto obs = data.stations_at(t, split);
    nn::Mat<float> pred = model.predict_stations(
        s, std::span<const std::array<double, 2>>(obs.coords.data(), obs.coords.size()));
    acc.add(obs, pred);

    core::FieldGrid g = model.predict_grid(s, mix_seed(seed, 0xEE, t));
    add_grid_mean(mean_grid, g, static_cast<int>(times.size()));
    const nn::Mat<float>& hr = data.hr_norm(t);
    for (int v = 0; v < data.dims().V; ++v)
      for (int c = 0; c < hr.cols(); ++c) {
        const double d = g.values[static_cast<size_t>(v) * hr.cols() + c] -
                         static_cast<double>(hr(v, c));
        grid_se += d * d;
        ++grid_n;
      }
  }
  EvalReport rep = acc.finish(model.name(), split);
  rep.grid_pred_mean = std::move(mean_grid);
  rep.grid_mse = grid_se / grid_n;
  return rep;
}

EvalReport evaluate_interp(const DatasetView& data, core::Resolution source, Split split) {
  const std::string name =
      source == core::Resolution::Low ? "interp_lr" : "interp_hr";
  Accumulator acc(data, split);
  const auto times = data.time_indices(split);
  core::FieldGrid mean_grid;
  double grid_se = 0.0;
  long grid_n = 0;
  const auto& ss = data.station_specs();
  for (int t : times) {
    core::FieldGrid field = source == core::Resolution::Low ? data.lr_grid_phys(t)
                                                            : data.hr_grid_phys(t);
    auto obs = data.stations_at(t, split);
    const auto vals = baselines::interp_baseline(
        field, std::span<const std::array<double, 2>>(obs.coords.data(), obs.coords.size()));
    const int M = static_cast<int>(obs.coords.size());
    nn::Mat<float> pred(data.dims().Vs, M);
    for (int v = 0; v < data.dims().Vs; ++v)
      for (int m = 0; m < M; ++m)
        pred(v, m) = static_cast<float>(
            (vals[static_cast<size_t>(v) * M + m] - ss[v].mean) / ss[v].std);
    acc.add(obs, pred);

    // grid prediction: the normalized field itself (upsampled for the input)
    core::FieldGrid gnorm = field;
    core::normalize(gnorm, data.grid_specs());
    core::FieldGrid hr_pred(data.domain(), core::Resolution::High, data.dims().V);
    if (source == core::Resolution::High) {
      hr_pred = gnorm;
    } else {
      std::vector<std::array<double, 2>> centers;
      for (int i = 0; i < hr_pred.height; ++i)
        for (int j = 0; j < hr_pred.width; ++j)
          centers.push_back({hr_pred.center_lon(j), hr_pred.center_lat(i)});
      hr_pred.values = core::bilinear_interpolate(
          gnorm, std::span<const std::array<double, 2>>(centers.data(), centers.size()));
    }
    add_grid_mean(mean_grid, hr_pred, static_cast<int>(times.size()));
    const nn::Mat<float>& hr = data.hr_norm(t);
    for (int v = 0; v < data.dims().V; ++v)
      for (int c = 0; c < hr.cols(); ++c) {
        const double d = hr_pred.values[static_cast<size_t>(v) * hr.cols() + c] -
                         static_cast<double>(hr(v, c));
        grid_se += d * d;
        ++grid_n;
      }
  }
  EvalReport rep = acc.finish(name, split);
  rep.grid_pred_mean = std::move(mean_grid);
  rep.grid_mse = grid_se / grid_n;
  return rep;
}

EvalReport evaluate_truth(const DatasetView& data, Split split) {
  Accumulator acc(data, split);
  for (int t : data.time_indices(split)) {
    auto obs = data.stations_at(t, split);
    auto clean = data.clean_stations_at(t, split);
    acc.add(obs, clean.values_norm);
  }
  return acc.finish("truth", split);
}

void write_report(const EvalReport& rep, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  io::write_metrics_csv((root / "metrics.csv").string(), rep.rows);

  {
    std::ofstream out(root / "per_station.csv");
    if (!out) throw IoError("cannot write per-station csv in " + dir);
    out << "station_id,lon,lat,variable,mse_norm\n";
    char buf[64];
    for (int v = 0; v < rep.per_station_mse.rows(); ++v)
      for (int m = 0; m < rep.per_station_mse.cols(); ++m) {
        std::snprintf(buf, sizeof(buf), "%.12g", rep.per_station_mse(v, m));
        out << rep.station_ids[m] << "," << rep.coords[m][0] << "," << rep.coords[m][1] << ","
            << rep.rows[v].variable << "," << buf << "\n";
      }
  }

  nlohmann::json j;
  j["method"] = rep.method;
  j["split"] = rep.split;
  j["n_stations"] = rep.n_stations;
  j["n_times"] = rep.n_times;
  j["grid_mse"] = rep.grid_mse;
  j["grid_shape"] = {rep.grid_pred_mean.vars, rep.grid_pred_mean.height,
                     rep.grid_pred_mean.width};
  j["domain"] = {{"lon_min", rep.grid_pred_mean.domain.lon_min},
                 {"lon_max", rep.grid_pred_mean.domain.lon_max},
                 {"lat_min", rep.grid_pred_mean.domain.lat_min},
                 {"lat_max", rep.grid_pred_mean.domain.lat_max},
                 {"cell_low", rep.grid_pred_mean.domain.cell_low},
                 {"cell_high", rep.grid_pred_mean.domain.cell_high}};
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& r : rep.rows) vars.push_back(r.variable);
  j["variables"] = vars;
  auto specs_json = [](const std::vector<core::VariableSpec>& specs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : specs)
      arr.push_back({{"name", s.short_name}, {"unit", s.unit}, {"mean", s.mean}, {"std", s.std}});
    return arr;
  };
  j["grid_specs"] = specs_json(rep.grid_specs);
  j["station_specs"] = specs_json(rep.station_specs);
  std::ofstream(root / "report.json") << j.dump(2) << "\n";

  if (!rep.grid_pred_mean.values.empty()) {
    std::vector<float> f(rep.grid_pred_mean.values.begin(), rep.grid_pred_mean.values.end());
    io::write_f32(root / "grid_pred_mean.f32", f.data(), static_cast<std::int64_t>(f.size()));
  }
}

EvalReport read_report(const std::string& dir) {
  const std::filesystem::path root(dir);
  std::ifstream in(root / "report.json");
  if (!in) throw MissingFileError("missing report.json in " + dir);
  nlohmann::json j;
  in >> j;

  EvalReport rep;
  rep.method = j.at("method");
  rep.split = j.at("split");
  rep.n_stations = j.at("n_stations");
  rep.n_times = j.at("n_times");
  rep.grid_mse = j.at("grid_mse");
  rep.rows = io::read_metrics_csv((root / "metrics.csv").string());
  auto specs_from = [](const nlohmann::json& arr) {
    std::vector<core::VariableSpec> out;
    for (const auto& e : arr)
      out.push_back({e.at("name").get<std::string>(), e.at("unit").get<std::string>(),
                     e.at("mean").get<double>(), e.at("std").get<double>()});
    return out;
  };
  rep.grid_specs = specs_from(j.at("grid_specs"));
  rep.station_specs = specs_from(j.at("station_specs"));

  const auto& dj = j.at("domain");
  core::DomainSpec dom{dj.at("lon_min"), dj.at("lon_max"), dj.at("lat_min"),
                       dj.at("lat_max"), dj.at("cell_low"), dj.at("cell_high")};
  const auto shape = j.at("grid_shape");
  rep.grid_pred_mean = core::FieldGrid(dom, core::Resolution::High, shape[0].get<int>());
  auto f = io::read_f32(root / "grid_pred_mean.f32",
                        static_cast<std::int64_t>(rep.grid_pred_mean.values.size()));
  for (size_t i = 0; i < f.size(); ++i) rep.grid_pred_mean.values[i] = f[i];

  std::ifstream ps(root / "per_station.csv");
  if (!ps) throw MissingFileError("missing per_station.csv in " + dir);
  std::string line;
  std::getline(ps, line);
  const int Vs = static_cast<int>(rep.rows.size());
  std::vector<std::array<double, 2>> coords;
  std::vector<int> ids;
  std::vector<double> vals;
  while (std::getline(ps, line)) {
    if (line.empty()) continue;
    std::stringstream sstr(line);
    std::string cell;
    std::getline(sstr, cell, ',');
    const int id = std::stoi(cell);
    std::getline(sstr, cell, ',');
    const double lon = std::stod(cell);
    std::getline(sstr, cell, ',');
    const double lat = std::stod(cell);
    std::getline(sstr, cell, ',');  // variable name
    std::getline(sstr, cell, ',');
    vals.push_back(std::stod(cell));
    if (static_cast<int>(ids.size()) < rep.n_stations) {
      ids.push_back(id);
      coords.push_back({lon, lat});
    }
  }
  rep.station_ids = std::move(ids);
  rep.coords = std::move(coords);
  rep.per_station_mse.resize(Vs, rep.n_stations);
  for (int v = 0; v < Vs; ++v)
    for (int m = 0; m < rep.n_stations; ++m)
      rep.per_station_mse(v, m) = vals[static_cast<size_t>(v) * rep.n_stations + m];
  return rep;
}

CompareOutput compare_methods(const std::vector<EvalReport>& reports) {
  CompareOutput out;
  for (const auto& rep : reports)
    out.rows.insert(out.rows.end(), rep.rows.begin(), rep.rows.end());
  if (reports.empty()) return out;
  for (const auto& var_row : reports.front().rows) {
    const std::string& var = var_row.variable;
    std::vector<std::pair<double, std::string>> entries;
    for (const auto& rep : reports)
      for (const auto& r : rep.rows)
        if (r.variable == var) entries.push_back({r.mse, r.method});
    std::sort(entries.begin(), entries.end());
    for (size_t k = 0; k < entries.size(); ++k)
      out.ranking.push_back({var, static_cast<int>(k) + 1, entries[k].second, entries[k].first});
  }
  return out;
}

void write_ranking_csv(const std::string& path, const std::vector<RankingRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write ranking csv: " + path);
  out << "variable,rank,method,mse\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.12g", r.mse);
    out << r.variable << "," << r.rank << "," << r.method << "," << buf << "\n";
  }
}

std::vector<RankingRow> read_ranking_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("missing ranking csv: " + path);
  std::string line;
  std::getline(in, line);
  if (line != "variable,rank,method,mse") throw IoError("bad ranking csv header in " + path);
  std::vector<RankingRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    RankingRow r;
    std::getline(ss, r.variable, ',');
    std::getline(ss, cell, ',');
    r.rank = std::stoi(cell);
    std::getline(ss, r.method, ',');
    std::getline(ss, cell, ',');
    r.mse = std::stod(cell);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace hyperds::train
