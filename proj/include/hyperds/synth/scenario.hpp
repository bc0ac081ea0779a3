#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyperds/core/domain.hpp"
#include "hyperds/synth/analytic_field.hpp"

namespace hyperds::synth {

using core::DomainSpec;
using core::FieldGrid;
using core::Split;
using core::StationSet;
using core::VariableSpec;

struct ScenarioConfig {
  std::uint64_t seed = 7;

  DomainSpec domain{80.0, 96.0, 18.0, 34.0, 1.0, 0.25};

  int modes_per_variable = 12;
  // Relative weight of the fine-scale modes (wavelengths near the high-res
  // cell size); scales the sub-grid variability every method competes on.
  double detail_scale = 1.0;

  // satellite grid cell = cell_high / sat_res_factor
  int sat_res_factor = 2;

  int t_train = 200, t_val = 20, t_test = 40;
  int n_train = 120, n_val = 20, n_test = 40;

  double sigma_obs = 0.05;  // station noise std, normalized units
  // Station bias std per observed variable {wind_speed, sp, t2m, tp1h},
  // normalized units.
  std::array<double, 4> bias_std{0.25, 0.30, 0.30, 0.15};
  double obs_dropout = 0.0;  // fraction of station readings masked invalid

  void validate() const;
};

// Satellite channel maps: smooth squashed mixes of the standardized true
// variables. Radiance-like: informative about the state but never shown to
// the model in closed form.
struct ChannelMap {
  std::array<double, core::kGridVars> weights{};
  double offset = 0.0;
  double out_mean = 0.0;  // normalization constants (probed at build)
  double out_std = 1.0;

  double raw(const double* z) const {
    double s = offset;
    for (int v = 0; v < core::kGridVars; ++v) s += weights[v] * z[v];
    return std::tanh(s);
  }
  double normalized(const double* z) const { return (raw(z) - out_mean) / out_std; }
};

struct ObservationOperator {
  std::array<ChannelMap, 4> channels;
  // Per observed variable: zero-mean smooth bias field in normalized units.
  std::array<std::vector<Mode>, core::kStationVars> bias_modes;
  double sigma_obs = 0.05;

  double bias_norm(int station_var, double u, double v) const {
    double s = 0.0;
    for (const Mode& m : bias_modes[station_var])
      s += m.amp * std::sin(m.kx * u + m.ky * v + m.phase);
    return s;
  }
};

struct SyntheticScenario {
  ScenarioConfig cfg;
  DomainSpec domain;
  std::array<VariableField, core::kGridVars> field;
  ObservationOperator obs;
  std::vector<VariableSpec> grid_specs;     // 5 entries
  std::vector<VariableSpec> station_specs;  // 4 entries
  std::vector<std::array<double, 2>> station_coords;
  std::vector<Split> station_split;
  int sat_height = 0, sat_width = 0;

  static SyntheticScenario build(const ScenarioConfig& cfg);

  int t_total() const { return cfg.t_train + cfg.t_val + cfg.t_test; }
  Split split_of_time(int t) const {
    if (t < cfg.t_train) return Split::Train;
    if (t < cfg.t_train + cfg.t_val) return Split::Val;
    return Split::Test;
  }

  double unit_u(double lon) const { return (lon - domain.lon_min) / (domain.lon_max - domain.lon_min); }
  double unit_v(double lat) const { return (lat - domain.lat_min) / (domain.lat_max - domain.lat_min); }

  // Exact pointwise truth, physical units, shaped (V, Q).
  std::vector<double> eval_true_field(std::span<const std::array<double, 2>> coords,
                                      double t) const;

  // Exact per-cell area averages (quadrature for the rectified variable).
  FieldGrid make_hr_field(double t) const;
  FieldGrid make_lr_field(double t) const;

  // Two normalized frames (t-1 and t), shaped (2, 4, SH, SW) row-major.
  std::vector<double> make_satellite_frames(double t) const;

  // Station observations: transform + bias + noise (values, physical units).
  StationSet make_station_obs(int t) const;
  // Same without noise (bias retained); the "truth as prediction" reference.
  StationSet make_station_clean(int t) const;

  // Physical-unit bias at a station for observed variable sv.
  double station_bias(int sv, double lon, double lat) const {
    return obs.bias_norm(sv, unit_u(lon), unit_v(lat)) * station_specs[sv].std;
  }
};

// Writes the full dataset (all time steps, all records, manifest) under dir.
// The persisted low-res input is the block mean of the persisted (float32)
// high-res grid, mirroring an average-pooling input pipeline exactly.
void build_dataset(const SyntheticScenario& scenario, const std::string& dir);

}  // namespace hyperds::synth
