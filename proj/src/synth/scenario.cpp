#include "hyperds/synth/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "hyperds/core/grid_ops.hpp"
#include "hyperds/core/rng.hpp"
#include "hyperds/io/dataset.hpp"

namespace hyperds::synth {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct LadderEntry {
  int cycles;     // nominal wavenumber (integer cycles over the domain)
  double weight;  // relative amplitude
};

// Spectral ladders per variable. Wind carries deliberate fine-scale energy
// (wavelengths down to ~4 high-res cells at the default 64x64 grid);
// temperature and pressure are smooth; precipitation is mid-scale and gets
// rectified into sparse cells.
std::vector<LadderEntry> ladder_for(int var, double detail_scale) {
  using V = std::vector<LadderEntry>;
  const double d = detail_scale;
  switch (var) {
    case core::kVarU10:
    case core::kVarV10:
      return V{{1, 0.80}, {1, 0.55}, {2, 0.60}, {2, 0.45}, {3, 0.40}, {4, 0.42},
               {6, 0.34}, {8, 0.42 * d}, {8, 0.34 * d}, {12, 0.26 * d}, {16, 0.34 * d},
               {16, 0.26 * d}};
    case core::kVarT2m:
      return V{{1, 0.95}, {1, 0.70}, {2, 0.55}, {2, 0.40}, {3, 0.32}, {3, 0.26},
               {4, 0.22}, {4, 0.18}, {6, 0.14 * d}, {6, 0.12 * d}, {8, 0.10 * d},
               {8, 0.08 * d}};
    case core::kVarSp:
      return V{{1, 1.00}, {1, 0.75}, {1, 0.55}, {2, 0.45}, {2, 0.35}, {2, 0.28},
               {3, 0.22}, {3, 0.18}, {4, 0.14 * d}, {4, 0.12 * d}, {6, 0.09 * d},
               {6, 0.07 * d}};
    default:  // tp1h raw field (pre-rectification)
      return V{{2, 0.70}, {3, 0.60}, {3, 0.45}, {4, 0.50}, {4, 0.40}, {6, 0.40},
               {6, 0.32}, {8, 0.30 * d}, {8, 0.24 * d}, {10, 0.20 * d}, {12, 0.16 * d},
               {14, 0.12 * d}};
  }
}

struct VarScale {
  double mean, std;
};

// Nominal physical scales; normalization specs are probed, not assumed.
VarScale scale_for(int var) {
  switch (var) {
    case core::kVarU10: return {2.6, 3.0};    // m/s
    case core::kVarV10: return {-1.4, 2.6};   // m/s
    case core::kVarT2m: return {286.0, 7.0};  // K
    case core::kVarSp: return {990.0, 14.0};  // hPa
    default: return {0.0, 1.0};               // tp raw; rescaled below
  }
}

Mode make_mode(Rng& rng, int cycles, double amp, const std::array<double, 2>& drift) {
  Mode m;
  const double theta = rng.uniform(0.0, kTwoPi);
  int nx = static_cast<int>(std::lround(cycles * std::cos(theta)));
  int ny = static_cast<int>(std::lround(cycles * std::sin(theta)));
  if (nx == 0 && ny == 0) nx = cycles;
  m.kx = kTwoPi * nx;
  m.ky = kTwoPi * ny;
  m.phase = rng.uniform(0.0, kTwoPi);
  // Mostly advective drift so adjacent frames show coherent apparent motion,
  // plus a small independent component.
  m.omega = m.kx * drift[0] + m.ky * drift[1] + rng.normal(0.0, 0.01);
  m.amp = amp;
  return m;
}

VariableField make_variable_field(std::uint64_t seed, int var, const ScenarioConfig& cfg) {
  Rng rng(seed);
  const std::array<double, 2> drift{0.010 + 0.004 * rng.normal(), 0.006 + 0.003 * rng.normal()};
  auto ladder = ladder_for(var, cfg.detail_scale);
  const int K = cfg.modes_per_variable;
  const VarScale sc = scale_for(var);

  VariableField f;
  f.rectified = (var == core::kVarTp);
  // weight normalization: plane modes with integer cycles have spatial
  // variance amp^2 / 2, so sum w^2/2 = 1 gives field std ~ sc.std.
  double wsum2 = 0.0;
  for (int k = 0; k < K; ++k) wsum2 += 0.5 * ladder[k % ladder.size()].weight *
                                       ladder[k % ladder.size()].weight;
  const double norm = 1.0 / std::sqrt(wsum2);
  for (int k = 0; k < K; ++k) {
    const auto& e = ladder[k % ladder.size()];
    f.modes.push_back(make_mode(rng, e.cycles, e.weight * norm * sc.std, drift));
  }
  f.trend.c0 = sc.mean;
  f.trend.cu = 0.25 * sc.std * rng.normal();
  f.trend.cv = 0.25 * sc.std * rng.normal();
  f.trend.cuv = 0.10 * sc.std * rng.normal();
  if (f.rectified) {
    // shift raw field down so roughly a third of the domain is wet, then
    // rescale to a millimetre-ish magnitude
    f.trend.c0 = -0.55;
    f.trend.cu *= 0.3;
    f.trend.cv *= 0.3;
    for (Mode& m : f.modes) m.amp *= 1.4;
  }
  return f;
}

std::vector<Mode> make_bias_modes(Rng& rng, double target_std) {
  // Low-order, exactly zero-mean over the domain (integer cycle counts).
  static const int nx[4] = {1, 0, 1, 2};
  static const int ny[4] = {0, 1, 1, 1};
  std::vector<Mode> modes;
  double wsum2 = 0.0;
  std::array<double, 4> w{};
  for (int k = 0; k < 4; ++k) {
    w[k] = 0.5 + rng.uniform();
    wsum2 += 0.5 * w[k] * w[k];
  }
  const double norm = target_std / std::sqrt(wsum2);
  for (int k = 0; k < 4; ++k) {
    Mode m;
    m.kx = kTwoPi * nx[k] * (rng.uniform() < 0.5 ? 1 : -1);
    m.ky = kTwoPi * ny[k];
    m.phase = rng.uniform(0.0, kTwoPi);
    m.omega = 0.0;
    m.amp = w[k] * norm;
    modes.push_back(m);
  }
  return modes;
}

std::array<ChannelMap, 4> make_channels(Rng& rng) {
  // Structured mixes of standardized (u, v, t2m, sp, tp): invertible-ish for
  // the first four variables, silent on precipitation.
  std::array<ChannelMap, 4> ch{};
  auto jitter = [&] { return 0.06 * rng.normal(); };
  ch[0].weights = {0.85 + jitter(), 0.0, 0.25 + jitter(), 0.0, 0.0};
  ch[1].weights = {0.0, 0.85 + jitter(), 0.0, 0.25 + jitter(), 0.0};
  ch[2].weights = {0.15 + jitter(), 0.0, 0.80 + jitter(), -0.20 + jitter(), 0.0};
  ch[3].weights = {0.0, 0.15 + jitter(), -0.20 + jitter(), 0.80 + jitter(), 0.0};
  for (auto& c : ch) c.offset = 0.15 * rng.normal();
  return ch;
}

}  // namespace

void ScenarioConfig::validate() const {
  domain.validate();
  if (modes_per_variable < 1) throw ConfigError("scenario: modes_per_variable must be >= 1");
  if (sat_res_factor < 1) throw ConfigError("scenario: sat_res_factor must be >= 1");
  if (t_train < 1 || t_val < 1 || t_test < 1)
    throw ConfigError("scenario: all time split counts must be >= 1");
  if (n_train < 1 || n_val < 1 || n_test < 1)
    throw ConfigError("scenario: all station split counts must be >= 1");
  if (sigma_obs < 0.0) throw ConfigError("scenario: sigma_obs must be >= 0");
  if (obs_dropout < 0.0 || obs_dropout >= 1.0)
    throw ConfigError("scenario: obs_dropout must be in [0, 1)");
}

SyntheticScenario SyntheticScenario::build(const ScenarioConfig& cfg) {
  cfg.validate();
  SyntheticScenario sc;
  sc.cfg = cfg;
  sc.domain = cfg.domain;
  sc.sat_height = cfg.domain.height(core::Resolution::High) * cfg.sat_res_factor;
  sc.sat_width = cfg.domain.width(core::Resolution::High) * cfg.sat_res_factor;

  for (int v = 0; v < core::kGridVars; ++v)
    sc.field[v] = make_variable_field(mix_seed(cfg.seed, 0x11, v), v, cfg);

  // grid variable specs: probed mean/std over the training period
  {
    Rng probe(mix_seed(cfg.seed, 0x22));
    const int N = 16384;
    sc.grid_specs.resize(core::kGridVars);
    std::vector<std::string> units = {"m/s", "m/s", "K", "hPa", "mm"};
    for (int v = 0; v < core::kGridVars; ++v) {
      double s1 = 0.0, s2 = 0.0;
      for (int k = 0; k < N; ++k) {
        const double u = probe.uniform(), w = probe.uniform();
        const double t = probe.uniform(0.0, cfg.t_train);
        const double x = sc.field[v].eval(u, w, t);
        s1 += x;
        s2 += x * x;
      }
      const double mean = s1 / N;
      const double var = std::max(1e-12, s2 / N - mean * mean);
      sc.grid_specs[v] = {core::grid_variable_names()[v], units[v], mean, std::sqrt(var)};
    }
  }

  // station variable specs: probed on the observed transform (no bias/noise)
  {
    Rng probe(mix_seed(cfg.seed, 0x23));
    const int N = 16384;
    sc.station_specs.resize(core::kStationVars);
    std::vector<std::string> units = {"m/s", "hPa", "K", "mm"};
    std::array<double, core::kStationVars> s1{}, s2{};
    for (int k = 0; k < N; ++k) {
      const double u = probe.uniform(), w = probe.uniform();
      const double t = probe.uniform(0.0, cfg.t_train);
      const double uu = sc.field[core::kVarU10].eval(u, w, t);
      const double vv = sc.field[core::kVarV10].eval(u, w, t);
      const double obs[core::kStationVars] = {std::hypot(uu, vv),
                                              sc.field[core::kVarSp].eval(u, w, t),
                                              sc.field[core::kVarT2m].eval(u, w, t),
                                              sc.field[core::kVarTp].eval(u, w, t)};
      for (int v = 0; v < core::kStationVars; ++v) {
        s1[v] += obs[v];
        s2[v] += obs[v] * obs[v];
      }
    }
    for (int v = 0; v < core::kStationVars; ++v) {
      const double mean = s1[v] / N;
      const double var = std::max(1e-12, s2[v] / N - mean * mean);
      sc.station_specs[v] = {core::station_variable_names()[v], units[v], mean, std::sqrt(var)};
    }
  }

  // observation operator
  {
    Rng rng(mix_seed(cfg.seed, 0x33));
    sc.obs.channels = make_channels(rng);
    sc.obs.sigma_obs = cfg.sigma_obs;
    for (int v = 0; v < core::kStationVars; ++v)
      sc.obs.bias_modes[v] = make_bias_modes(rng, cfg.bias_std[v]);
    // probe channel normalization constants at t = 0
    Rng probe(mix_seed(cfg.seed, 0x34));
    const int N = 8192;
    std::array<double, 4> s1{}, s2{};
    for (int k = 0; k < N; ++k) {
      const double u = probe.uniform(), w = probe.uniform();
      double z[core::kGridVars];
      for (int v = 0; v < core::kGridVars; ++v)
        z[v] = (sc.field[v].eval(u, w, 0.0) - sc.grid_specs[v].mean) / sc.grid_specs[v].std;
      for (int c = 0; c < 4; ++c) {
        const double x = sc.obs.channels[c].raw(z);
        s1[c] += x;
        s2[c] += x * x;
      }
    }
    for (int c = 0; c < 4; ++c) {
      const double mean = s1[c] / N;
      const double var = std::max(1e-12, s2[c] / N - mean * mean);
      sc.obs.channels[c].out_mean = mean;
      sc.obs.channels[c].out_std = std::sqrt(var);
    }
  }

  // station layout: uniform strictly inside the domain, shuffled split tags
  {
    Rng rng(mix_seed(cfg.seed, 0x44));
    const int M = cfg.n_train + cfg.n_val + cfg.n_test;
    const double mx = 0.01 * (cfg.domain.lon_max - cfg.domain.lon_min);
    const double my = 0.01 * (cfg.domain.lat_max - cfg.domain.lat_min);
    sc.station_coords.resize(M);
    for (int m = 0; m < M; ++m)
      sc.station_coords[m] = {rng.uniform(cfg.domain.lon_min + mx, cfg.domain.lon_max - mx),
                              rng.uniform(cfg.domain.lat_min + my, cfg.domain.lat_max - my)};
    sc.station_split.assign(M, Split::Train);
    std::vector<int> order(M);
    for (int m = 0; m < M; ++m) order[m] = m;
    for (int m = M - 1; m > 0; --m)
      std::swap(order[m], order[rng.below(static_cast<std::uint64_t>(m) + 1)]);
    for (int k = 0; k < M; ++k) {
      if (k < cfg.n_train) sc.station_split[order[k]] = Split::Train;
      else if (k < cfg.n_train + cfg.n_val) sc.station_split[order[k]] = Split::Val;
      else sc.station_split[order[k]] = Split::Test;
    }
  }
  return sc;
}

std::vector<double> SyntheticScenario::eval_true_field(
    std::span<const std::array<double, 2>> coords, double t) const {
  const int Q = static_cast<int>(coords.size());
  std::vector<double> out(static_cast<size_t>(core::kGridVars) * Q);
  for (int q = 0; q < Q; ++q) {
    if (!domain.contains(coords[q][0], coords[q][1]))
      throw DomainError("eval_true_field: coordinate outside domain");
    const double u = unit_u(coords[q][0]), v = unit_v(coords[q][1]);
    for (int k = 0; k < core::kGridVars; ++k)
      out[static_cast<size_t>(k) * Q + q] = field[k].eval(u, v, t);
  }
  return out;
}

namespace {

FieldGrid make_field(const SyntheticScenario& sc, core::Resolution res, double t) {
  FieldGrid g(sc.domain, res, core::kGridVars);
  for (int v = 0; v < core::kGridVars; ++v) {
    const Eigen::MatrixXd avg = cell_averages(sc.field[v], g.height, g.width, t);
    for (int i = 0; i < g.height; ++i)
      for (int j = 0; j < g.width; ++j) g.at(v, i, j) = avg(i, j);
  }
  return g;
}

}  // namespace

FieldGrid SyntheticScenario::make_hr_field(double t) const {
  return make_field(*this, core::Resolution::High, t);
}

FieldGrid SyntheticScenario::make_lr_field(double t) const {
  FieldGrid g(domain, core::Resolution::Low, core::kGridVars);
  const int k = domain.factor();
  for (int v = 0; v < core::kGridVars; ++v) {
    if (!field[v].rectified) {
      const Eigen::MatrixXd avg = cell_averages(field[v], g.height, g.width, t);
      for (int i = 0; i < g.height; ++i)
        for (int j = 0; j < g.width; ++j) g.at(v, i, j) = avg(i, j);
    } else {
      // block mean of the high-res quadrature so the averaging hierarchy is
      // exact for the rectified variable as well
      const Eigen::MatrixXd hr =
          cell_averages(field[v], g.height * k, g.width * k, t);
      for (int i = 0; i < g.height; ++i)
        for (int j = 0; j < g.width; ++j)
          g.at(v, i, j) = hr.block(i * k, j * k, k, k).mean();
    }
  }
  return g;
}

std::vector<double> SyntheticScenario::make_satellite_frames(double t) const {
  const int SH = sat_height, SW = sat_width;
  std::vector<double> out(static_cast<size_t>(2) * 4 * SH * SW);
  Eigen::VectorXd u_nodes(SW), v_nodes(SH);
  for (int j = 0; j < SW; ++j) u_nodes[j] = (j + 0.5) / SW;
  for (int i = 0; i < SH; ++i) v_nodes[i] = (i + 0.5) / SH;
  for (int f = 0; f < 2; ++f) {
    const double tf = t - 1.0 + f;  // frame 0 at t-1, frame 1 at t
    std::array<Eigen::MatrixXd, core::kGridVars> z;
    for (int v = 0; v < core::kGridVars; ++v) {
      z[v] = field[v].eval_grid(u_nodes, v_nodes, tf);
      z[v] = (z[v].array() - grid_specs[v].mean) / grid_specs[v].std;
    }
    for (int c = 0; c < 4; ++c) {
      double* dst = out.data() + (static_cast<size_t>(f) * 4 + c) * SH * SW;
      for (int i = 0; i < SH; ++i)
        for (int j = 0; j < SW; ++j) {
          double zz[core::kGridVars];
          for (int v = 0; v < core::kGridVars; ++v) zz[v] = z[v](i, j);
          dst[static_cast<size_t>(i) * SW + j] = obs.channels[c].normalized(zz);
        }
    }
  }
  return out;
}

namespace {

StationSet station_values(const SyntheticScenario& sc, int t, bool with_noise) {
  StationSet s;
  s.coords = sc.station_coords;
  s.split = sc.station_split;
  s.vars = core::kStationVars;
  const int M = s.count();
  s.values.assign(static_cast<size_t>(core::kStationVars) * M, 0.0);
  s.valid.assign(static_cast<size_t>(core::kStationVars) * M, 1);

  const auto truth = sc.eval_true_field(
      std::span<const std::array<double, 2>>(s.coords.data(), s.coords.size()), t);
  for (int m = 0; m < M; ++m) {
    const double u = truth[static_cast<size_t>(core::kVarU10) * M + m];
    const double v = truth[static_cast<size_t>(core::kVarV10) * M + m];
    const double obs_clean[core::kStationVars] = {
        std::hypot(u, v), truth[static_cast<size_t>(core::kVarSp) * M + m],
        truth[static_cast<size_t>(core::kVarT2m) * M + m],
        truth[static_cast<size_t>(core::kVarTp) * M + m]};
    for (int sv = 0; sv < core::kStationVars; ++sv) {
      double val = obs_clean[sv] + sc.station_bias(sv, s.coords[m][0], s.coords[m][1]);
      if (with_noise) {
        Rng rng(mix_seed(sc.cfg.seed, 0x55, static_cast<std::uint64_t>(t),
                         static_cast<std::uint64_t>(m) * core::kStationVars + sv));
        val += rng.normal(0.0, sc.obs.sigma_obs * sc.station_specs[sv].std);
        if (sc.cfg.obs_dropout > 0.0 && rng.uniform() < sc.cfg.obs_dropout)
          s.is_valid(sv, m) = 0;
      }
      s.value(sv, m) = val;
    }
  }
  return s;
}

}  // namespace

StationSet SyntheticScenario::make_station_obs(int t) const {
  return station_values(*this, t, true);
}
StationSet SyntheticScenario::make_station_clean(int t) const {
  return station_values(*this, t, false);
}

void build_dataset(const SyntheticScenario& sc, const std::string& dir) {
  using io::TensorRecord;
  const auto& cfg = sc.cfg;
  const int T = sc.t_total();
  const int LH = sc.domain.height(core::Resolution::Low);
  const int LW = sc.domain.width(core::Resolution::Low);
  const int TH = sc.domain.height(core::Resolution::High);
  const int TW = sc.domain.width(core::Resolution::High);
  const int SH = sc.sat_height, SW = sc.sat_width;
  const int M = static_cast<int>(sc.station_coords.size());
  const int V = core::kGridVars, Vs = core::kStationVars;
  const int k = sc.domain.factor();

  TensorRecord lr{"lr_fields", {T, V, LH, LW}, {}};
  TensorRecord hr{"hr_fields", {T, V, TH, TW}, {}};
  TensorRecord sat{"sat_frames", {T, 2, 4, SH, SW}, {}};
  TensorRecord obs{"station_obs", {T, Vs, M}, {}};
  TensorRecord clean{"station_clean", {T, Vs, M}, {}};
  TensorRecord valid{"station_valid", {T, Vs, M}, {}};
  TensorRecord coords{"station_coords", {M, 2}, {}};
  TensorRecord bias{"station_bias", {Vs, M}, {}};
  lr.data.resize(lr.element_count());
  hr.data.resize(hr.element_count());
  sat.data.resize(sat.element_count());
  obs.data.resize(obs.element_count());
  clean.data.resize(clean.element_count());
  valid.data.resize(valid.element_count());
  coords.data.resize(coords.element_count());
  bias.data.resize(bias.element_count());

  for (int m = 0; m < M; ++m) {
    coords.data[2 * m] = static_cast<float>(sc.station_coords[m][0]);
    coords.data[2 * m + 1] = static_cast<float>(sc.station_coords[m][1]);
    for (int sv = 0; sv < Vs; ++sv)
      bias.data[static_cast<size_t>(sv) * M + m] = static_cast<float>(
          sc.station_bias(sv, sc.station_coords[m][0], sc.station_coords[m][1]));
  }

  // per-time-step generation is independent; OpenMP keeps it deterministic
  // because each t writes a disjoint slice
#pragma omp parallel for schedule(dynamic)
  for (int t = 0; t < T; ++t) {
    const FieldGrid hrg = sc.make_hr_field(t);
    float* hdst = hr.data.data() + static_cast<size_t>(t) * V * TH * TW;
    for (size_t i = 0; i < hrg.values.size(); ++i) hdst[i] = static_cast<float>(hrg.values[i]);

    // input LR = block mean of the persisted f32 HR values (average pooling)
    FieldGrid hr_f32 = hrg;
    for (size_t i = 0; i < hr_f32.values.size(); ++i) hr_f32.values[i] = hdst[i];
    hr_f32.res = core::Resolution::High;
    const FieldGrid lrg = core::area_downsample(hr_f32, k);
    float* ldst = lr.data.data() + static_cast<size_t>(t) * V * LH * LW;
    for (size_t i = 0; i < lrg.values.size(); ++i) ldst[i] = static_cast<float>(lrg.values[i]);

    const auto frames = sc.make_satellite_frames(t);
    float* sdst = sat.data.data() + static_cast<size_t>(t) * 2 * 4 * SH * SW;
    for (size_t i = 0; i < frames.size(); ++i) sdst[i] = static_cast<float>(frames[i]);

    const StationSet so = sc.make_station_obs(t);
    const StationSet scn = sc.make_station_clean(t);
    float* odst = obs.data.data() + static_cast<size_t>(t) * Vs * M;
    float* cdst = clean.data.data() + static_cast<size_t>(t) * Vs * M;
    float* vdst = valid.data.data() + static_cast<size_t>(t) * Vs * M;
    for (int i = 0; i < Vs * M; ++i) {
      odst[i] = static_cast<float>(so.values[i]);
      cdst[i] = static_cast<float>(scn.values[i]);
      vdst[i] = static_cast<float>(so.valid[i]);
    }
  }

  io::DatasetManifest manifest;
  nlohmann::json meta;
  meta["domain"] = {{"lon_min", sc.domain.lon_min}, {"lon_max", sc.domain.lon_max},
                    {"lat_min", sc.domain.lat_min}, {"lat_max", sc.domain.lat_max},
                    {"cell_low", sc.domain.cell_low}, {"cell_high", sc.domain.cell_high}};
  auto specs_json = [](const std::vector<VariableSpec>& specs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : specs)
      arr.push_back({{"name", s.short_name}, {"unit", s.unit}, {"mean", s.mean}, {"std", s.std}});
    return arr;
  };
  meta["grid_variables"] = specs_json(sc.grid_specs);
  meta["station_variables"] = specs_json(sc.station_specs);
  meta["shapes"] = {{"V", V}, {"Vs", Vs}, {"LH", LH}, {"LW", LW}, {"TH", TH}, {"TW", TW},
                    {"SH", SH}, {"SW", SW}, {"frames", 2}, {"channels", 4}, {"T", T}, {"M", M}};
  meta["time_splits"] = {{"train", {0, cfg.t_train}},
                         {"val", {cfg.t_train, cfg.t_train + cfg.t_val}},
                         {"test", {cfg.t_train + cfg.t_val, T}}};
  std::vector<int> tags(M);
  for (int m = 0; m < M; ++m) tags[m] = static_cast<int>(sc.station_split[m]);
  meta["station_splits"] = {{"n_train", cfg.n_train}, {"n_val", cfg.n_val},
                            {"n_test", cfg.n_test}, {"tags", tags}};
  meta["scenario"] = {{"seed", cfg.seed}, {"modes_per_variable", cfg.modes_per_variable},
                      {"detail_scale", cfg.detail_scale}, {"sat_res_factor", cfg.sat_res_factor},
                      {"sigma_obs", cfg.sigma_obs}, {"obs_dropout", cfg.obs_dropout},
                      {"bias_std", cfg.bias_std}};

  std::vector<TensorRecord> records;
  records.push_back(std::move(lr));
  records.push_back(std::move(hr));
  records.push_back(std::move(sat));
  records.push_back(std::move(obs));
  records.push_back(std::move(clean));
  records.push_back(std::move(valid));
  records.push_back(std::move(coords));
  records.push_back(std::move(bias));
  for (const auto& r : records) manifest.index.push_back({r.name, r.shape});
  manifest.meta = std::move(meta);
  io::write_dataset(records, manifest, dir);
}

}  // namespace hyperds::synth
