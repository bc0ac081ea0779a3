#include "hyperds/train/dataset_view.hpp"

#include "hyperds/io/dataset.hpp"

namespace hyperds::train {

namespace {

std::vector<core::VariableSpec> specs_from_json(const nlohmann::json& arr) {
  std::vector<core::VariableSpec> out;
  for (const auto& e : arr)
    out.push_back({e.at("name").get<std::string>(), e.at("unit").get<std::string>(),
                   e.at("mean").get<double>(), e.at("std").get<double>()});
  return out;
}

}  // namespace

DatasetView DatasetView::load(const std::string& dir) {
  auto bundle = io::read_dataset(dir);
  DatasetView v;
  v.meta_ = bundle.manifest.meta;
  const auto& shapes = v.meta_.at("shapes");
  v.dims_.V = shapes.at("V");
  v.dims_.Vs = shapes.at("Vs");
  v.dims_.LH = shapes.at("LH");
  v.dims_.LW = shapes.at("LW");
  v.dims_.TH = shapes.at("TH");
  v.dims_.TW = shapes.at("TW");
  v.dims_.SH = shapes.at("SH");
  v.dims_.SW = shapes.at("SW");
  v.dims_.frames = shapes.at("frames");
  v.dims_.channels = shapes.at("channels");
  const auto& dj = v.meta_.at("domain");
  v.domain_ = core::DomainSpec{dj.at("lon_min"), dj.at("lon_max"), dj.at("lat_min"),
                               dj.at("lat_max"), dj.at("cell_low"), dj.at("cell_high")};
  v.domain_.validate();
  v.grid_specs_ = specs_from_json(v.meta_.at("grid_variables"));
  v.station_specs_ = specs_from_json(v.meta_.at("station_variables"));
  v.sigma_obs_ = v.meta_.at("scenario").value("sigma_obs", 0.0);

  const auto& ts = v.meta_.at("time_splits");
  v.t_train_ = ts.at("train")[1].get<int>() - ts.at("train")[0].get<int>();
  v.t_val_ = ts.at("val")[1].get<int>() - ts.at("val")[0].get<int>();
  v.t_test_ = ts.at("test")[1].get<int>() - ts.at("test")[0].get<int>();
  v.t_total_ = shapes.at("T");
  if (v.t_total_ != v.t_train_ + v.t_val_ + v.t_test_)
    throw ConfigError("dataset: time splits do not cover T");

  v.lr_ = bundle.get("lr_fields").data;
  v.hr_ = bundle.get("hr_fields").data;
  v.sat_ = bundle.get("sat_frames").data;
  v.obs_ = bundle.get("station_obs").data;
  v.clean_ = bundle.get("station_clean").data;
  v.valid_ = bundle.get("station_valid").data;
  v.bias_ = bundle.get("station_bias").data;
  const auto& coords = bundle.get("station_coords");
  const int M = static_cast<int>(coords.shape[0]);
  v.coords_.resize(M);
  for (int m = 0; m < M; ++m)
    v.coords_[m] = {coords.data[2 * m], coords.data[2 * m + 1]};
  const auto& tags = v.meta_.at("station_splits").at("tags");
  if (static_cast<int>(tags.size()) != M)
    throw ConfigError("dataset: station split tags do not cover all stations");
  v.splits_.resize(M);
  for (int m = 0; m < M; ++m) v.splits_[m] = static_cast<Split>(tags[m].get<int>());
  v.hr_norm_cache_.resize(v.t_total_);
  return v;
}

Split DatasetView::split_of_time(int t) const {
  if (t < t_train_) return Split::Train;
  if (t < t_train_ + t_val_) return Split::Val;
  return Split::Test;
}

std::vector<int> DatasetView::time_indices(Split s) const {
  std::vector<int> out;
  for (int t = 0; t < t_total_; ++t)
    if (split_of_time(t) == s) out.push_back(t);
  return out;
}

void DatasetView::note_time(int t) const {
  if (split_of_time(t) == Split::Test) ++log_.test_time_reads;
}

SampleData<float> DatasetView::sample(int t, Split station_split, bool with_hr) const {
  note_time(t);
  SampleData<float> s;
  const int V = dims_.V, LHW = dims_.LH * dims_.LW;
  s.lr.resize(V, LHW);
  const float* lsrc = lr_.data() + static_cast<size_t>(t) * V * LHW;
  for (int v = 0; v < V; ++v) {
    const double mean = grid_specs_[v].mean, std = grid_specs_[v].std;
    for (int c = 0; c < LHW; ++c)
      s.lr(v, c) = static_cast<float>((lsrc[static_cast<size_t>(v) * LHW + c] - mean) / std);
  }
  s.lr_norm = core::FieldGrid(domain_, core::Resolution::Low, V);
  for (int v = 0; v < V; ++v)
    for (int c = 0; c < LHW; ++c)
      s.lr_norm.values[static_cast<size_t>(v) * LHW + c] = s.lr(v, c);

  const size_t sat_n = static_cast<size_t>(dims_.frames) * dims_.channels * dims_.SH * dims_.SW;
  s.sat.resize(dims_.frames * dims_.channels, static_cast<Eigen::Index>(dims_.SH) * dims_.SW);
  const float* ssrc = sat_.data() + static_cast<size_t>(t) * sat_n;
  for (int c = 0; c < dims_.frames * dims_.channels; ++c)
    for (int p = 0; p < dims_.SH * dims_.SW; ++p)
      s.sat(c, p) = ssrc[static_cast<size_t>(c) * dims_.SH * dims_.SW + p];

  if (with_hr) s.hr = &hr_norm(t);

  StationsAt st = stations_at(t, station_split);
  s.stn_coords = std::move(st.coords);
  s.stn_values = std::move(st.values_norm);
  s.stn_valid = std::move(st.valid);
  return s;
}

const nn::Mat<float>& DatasetView::hr_norm(int t) const {
  note_time(t);
  auto& cached = hr_norm_cache_[t];
  if (cached.size() == 0) {
    const int V = dims_.V, THW = dims_.TH * dims_.TW;
    cached.resize(V, THW);
    const float* src = hr_.data() + static_cast<size_t>(t) * V * THW;
    for (int v = 0; v < V; ++v) {
      const double mean = grid_specs_[v].mean, std = grid_specs_[v].std;
      for (int c = 0; c < THW; ++c)
        cached(v, c) = static_cast<float>((src[static_cast<size_t>(v) * THW + c] - mean) / std);
    }
  }
  return cached;
}

namespace {

StationsAt stations_from(const std::vector<float>& values, const std::vector<float>& valid,
                         const std::vector<std::array<double, 2>>& coords,
                         const std::vector<Split>& splits,
                         const std::vector<core::VariableSpec>& specs, int t, int Vs,
                         Split split) {
  const int M = static_cast<int>(coords.size());
  StationsAt out;
  for (int m = 0; m < M; ++m)
    if (splits[m] == split) out.station_ids.push_back(m);
  const int Ms = static_cast<int>(out.station_ids.size());
  out.coords.resize(Ms);
  out.values_norm.resize(Vs, Ms);
  out.valid.resize(static_cast<size_t>(Vs) * Ms);
  const float* vsrc = values.data() + static_cast<size_t>(t) * Vs * M;
  const float* msrc = valid.data() + static_cast<size_t>(t) * Vs * M;
  for (int k = 0; k < Ms; ++k) {
    const int m = out.station_ids[k];
    out.coords[k] = coords[m];
    for (int v = 0; v < Vs; ++v) {
      out.values_norm(v, k) = static_cast<float>(
          (vsrc[static_cast<size_t>(v) * M + m] - specs[v].mean) / specs[v].std);
      out.valid[static_cast<size_t>(v) * Ms + k] =
          msrc[static_cast<size_t>(v) * M + m] > 0.5f ? 1 : 0;
    }
  }
  return out;
}

}  // namespace

StationsAt DatasetView::stations_at(int t, Split split) const {
  note_time(t);
  if (split == Split::Test) ++log_.test_station_reads;
  return stations_from(obs_, valid_, coords_, splits_, station_specs_, t, dims_.Vs, split);
}

StationsAt DatasetView::clean_stations_at(int t, Split split) const {
  note_time(t);
  if (split == Split::Test) ++log_.test_station_reads;
  return stations_from(clean_, valid_, coords_, splits_, station_specs_, t, dims_.Vs, split);
}

core::FieldGrid DatasetView::lr_grid_phys(int t) const {
  note_time(t);
  core::FieldGrid g(domain_, core::Resolution::Low, dims_.V);
  const float* src = lr_.data() + static_cast<size_t>(t) * g.values.size();
  for (size_t i = 0; i < g.values.size(); ++i) g.values[i] = src[i];
  return g;
}

core::FieldGrid DatasetView::hr_grid_phys(int t) const {
  note_time(t);
  core::FieldGrid g(domain_, core::Resolution::High, dims_.V);
  const float* src = hr_.data() + static_cast<size_t>(t) * g.values.size();
  for (size_t i = 0; i < g.values.size(); ++i) g.values[i] = src[i];
  return g;
}

core::FieldGrid DatasetView::lr_grid_norm(int t) const {
  core::FieldGrid g = lr_grid_phys(t);
  core::normalize(g, grid_specs_);
  return g;
}

}  // namespace hyperds::train
