#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "hyperds/core/grid_ops.hpp"
#include "hyperds/core/rng.hpp"
#include "hyperds/io/dataset.hpp"
#include "hyperds/synth/scenario.hpp"

using namespace hyperds;
using namespace hyperds::core;
using namespace hyperds::synth;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

ScenarioConfig tiny_config() {
  ScenarioConfig cfg;
  cfg.seed = 99;
  cfg.t_train = 4;
  cfg.t_val = 2;
  cfg.t_test = 2;
  cfg.n_train = 30;
  cfg.n_val = 10;
  cfg.n_test = 10;
  return cfg;
}

// A hand-held scenario over the unit square with identity normalization.
SyntheticScenario manual_scenario() {
  SyntheticScenario sc;
  sc.cfg = tiny_config();
  sc.cfg.domain = DomainSpec{0.0, 1.0, 0.0, 1.0, 0.5, 0.25};
  sc.domain = sc.cfg.domain;
  sc.sat_height = 8;
  sc.sat_width = 8;
  for (auto& f : sc.field) f = VariableField{};
  sc.grid_specs.assign(kGridVars, VariableSpec{"x", "u", 0.0, 1.0});
  sc.station_specs.assign(kStationVars, VariableSpec{"x", "u", 0.0, 1.0});
  for (int c = 0; c < 4; ++c) {
    sc.obs.channels[c] = ChannelMap{};
    sc.obs.channels[c].weights[c] = 1.0;
  }
  sc.obs.sigma_obs = 0.0;
  sc.station_coords = {{0.3, 0.4}, {0.7, 0.6}};
  sc.station_split = {Split::Train, Split::Test};
  return sc;
}

// sin(2*pi*x) * cos(2*pi*y) as two plane modes
std::vector<Mode> product_mode() {
  // sin a cos b = (sin(a+b) + sin(a-b)) / 2
  Mode m1{0.5, kTwoPi, kTwoPi, 0.0, 0.0};
  Mode m2{0.5, kTwoPi, -kTwoPi, 0.0, 0.0};
  return {m1, m2};
}

}  // namespace

TEST_CASE("eval_true_field: single mode peak and zero field") {
  SyntheticScenario sc = manual_scenario();
  sc.field[0].modes = product_mode();

  std::array<double, 2> p{0.25, 0.0};
  // station coords api requires inside-domain; 0.0 is on the boundary, allowed
  auto vals = sc.eval_true_field(std::span<const std::array<double, 2>>(&p, 1), 0.0);
  CHECK(vals[0] == doctest::Approx(1.0).epsilon(1e-12));
  for (int v = 1; v < kGridVars; ++v) CHECK(vals[v] == 0.0);

  std::array<double, 2> outside{1.5, 0.5};
  CHECK_THROWS_AS(sc.eval_true_field(std::span<const std::array<double, 2>>(&outside, 1), 0.0),
                  DomainError);
}

TEST_CASE("eval_true_field matches independent mode-list evaluation") {
  SyntheticScenario sc = SyntheticScenario::build(tiny_config());
  Rng rng(3);
  for (int k = 0; k < 100; ++k) {
    std::array<double, 2> p{rng.uniform(sc.domain.lon_min, sc.domain.lon_max),
                            rng.uniform(sc.domain.lat_min, sc.domain.lat_max)};
    const double t = rng.uniform(0.0, 8.0);
    auto vals = sc.eval_true_field(std::span<const std::array<double, 2>>(&p, 1), t);
    const double u = (p[0] - sc.domain.lon_min) / (sc.domain.lon_max - sc.domain.lon_min);
    const double v = (p[1] - sc.domain.lat_min) / (sc.domain.lat_max - sc.domain.lat_min);
    for (int var = 0; var < kGridVars; ++var) {
      const auto& f = sc.field[var];
      double expect = f.trend.c0 + f.trend.cu * u + f.trend.cv * v + f.trend.cuv * u * v +
                      f.trend.cuu * u * u + f.trend.cvv * v * v;
      for (const auto& m : f.modes)
        expect += m.amp * std::sin(m.kx * u + m.ky * v + m.phase + m.omega * t);
      if (f.rectified) expect = std::max(0.0, expect);
      CHECK(vals[var] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("cell averages: cos integral vanishes on half-period cell") {
  SyntheticScenario sc = manual_scenario();
  sc.field[0].modes = product_mode();
  FieldGrid lr = sc.make_lr_field(0.0);
  // cell [0,0.5]x[0,0.5]: integral of cos(2*pi*y) over [0,0.5] is zero
  CHECK(std::abs(lr.at(0, 0, 0)) < 1e-12);
}

TEST_CASE("cell averages: constant field") {
  SyntheticScenario sc = manual_scenario();
  sc.field[2].trend.c0 = 7.25;
  FieldGrid hr = sc.make_hr_field(1.0);
  FieldGrid lr = sc.make_lr_field(1.0);
  for (int i = 0; i < hr.height; ++i)
    for (int j = 0; j < hr.width; ++j) CHECK(hr.at(2, i, j) == doctest::Approx(7.25));
  for (int i = 0; i < lr.height; ++i)
    for (int j = 0; j < lr.width; ++j) CHECK(lr.at(2, i, j) == doctest::Approx(7.25));
}

TEST_CASE("nesting: area_downsample(HR, k) equals LR to 1e-10") {
  SyntheticScenario sc = SyntheticScenario::build(tiny_config());
  for (double t : {0.0, 3.0}) {
    FieldGrid hr = sc.make_hr_field(t);
    FieldGrid lr = sc.make_lr_field(t);
    FieldGrid down = area_downsample(hr, sc.domain.factor());
    REQUIRE(down.values.size() == lr.values.size());
    for (size_t i = 0; i < lr.values.size(); ++i)
      CHECK(std::abs(down.values[i] - lr.values[i]) < 1e-10);
  }
}

TEST_CASE("satellite frames: constant truth gives constant frames") {
  SyntheticScenario sc = manual_scenario();
  sc.field[0].trend.c0 = 1.5;  // constant in space and time
  auto frames = sc.make_satellite_frames(2.0);
  REQUIRE(frames.size() == size_t(2) * 4 * 8 * 8);
  for (size_t i = 1; i < frames.size(); ++i)
    CHECK(frames[i % (8 * 8)] == doctest::Approx(frames[0]).epsilon(1e-12));
}

TEST_CASE("satellite frames differ iff temporal frequency is nonzero") {
  SyntheticScenario sc = manual_scenario();
  sc.field[0].modes = product_mode();  // omega = 0
  auto frames = sc.make_satellite_frames(1.0);
  const size_t n = size_t(4) * 8 * 8;
  double diff = 0.0;
  for (size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(frames[i] - frames[n + i]));
  CHECK(diff < 1e-14);

  sc.field[0].modes[0].omega = 0.45;
  frames = sc.make_satellite_frames(1.0);
  diff = 0.0;
  for (size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(frames[i] - frames[n + i]));
  CHECK(diff > 1e-4);
}

TEST_CASE("satellite channels match direct composition at probe cells") {
  SyntheticScenario sc = SyntheticScenario::build(tiny_config());
  const double t = 2.0;
  auto frames = sc.make_satellite_frames(t);
  Rng rng(17);
  const int SH = sc.sat_height, SW = sc.sat_width;
  for (int k = 0; k < 50; ++k) {
    const int i = static_cast<int>(rng.below(SH));
    const int j = static_cast<int>(rng.below(SW));
    const int c = static_cast<int>(rng.below(4));
    const int f = static_cast<int>(rng.below(2));
    const double u = (j + 0.5) / SW, v = (i + 0.5) / SH;
    double z[kGridVars];
    for (int var = 0; var < kGridVars; ++var)
      z[var] = (sc.field[var].eval(u, v, t - 1.0 + f) - sc.grid_specs[var].mean) /
               sc.grid_specs[var].std;
    const auto& ch = sc.obs.channels[c];
    double s = ch.offset;
    for (int var = 0; var < kGridVars; ++var) s += ch.weights[var] * z[var];
    const double expect = (std::tanh(s) - ch.out_mean) / ch.out_std;
    const double got = frames[((static_cast<size_t>(f) * 4 + c) * SH + i) * SW + j];
    CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("station observations: wind speed composition 3-4-5") {
  SyntheticScenario sc = manual_scenario();
  sc.field[kVarU10].trend.c0 = 3.0;
  sc.field[kVarV10].trend.c0 = 4.0;
  StationSet s = sc.make_station_obs(0);  // sigma 0, zero bias
  for (int m = 0; m < s.count(); ++m) CHECK(s.value(kStnWs, m) == doctest::Approx(5.0));
}

TEST_CASE("station observations: bias isolation at sigma 0") {
  ScenarioConfig cfg = tiny_config();
  cfg.sigma_obs = 0.0;
  SyntheticScenario sc = SyntheticScenario::build(cfg);
  StationSet s = sc.make_station_obs(1);
  const auto truth = sc.eval_true_field(
      std::span<const std::array<double, 2>>(sc.station_coords.data(), sc.station_coords.size()),
      1.0);
  const int M = s.count();
  for (int m = 0; m < M; ++m) {
    const double u = truth[static_cast<size_t>(kVarU10) * M + m];
    const double v = truth[static_cast<size_t>(kVarV10) * M + m];
    const double tr[kStationVars] = {std::hypot(u, v), truth[static_cast<size_t>(kVarSp) * M + m],
                                     truth[static_cast<size_t>(kVarT2m) * M + m],
                                     truth[static_cast<size_t>(kVarTp) * M + m]};
    for (int sv = 0; sv < kStationVars; ++sv) {
      const double b = sc.station_bias(sv, s.coords[m][0], s.coords[m][1]);
      CHECK(s.value(sv, m) - tr[sv] == doctest::Approx(b).epsilon(1e-12));
    }
  }
}

TEST_CASE("station bias field has zero spatial mean") {
  SyntheticScenario sc = SyntheticScenario::build(tiny_config());
  // integer-cycle modes integrate to zero exactly; verify numerically
  for (int sv = 0; sv < kStationVars; ++sv) {
    double s = 0.0;
    const int N = 200;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j)
        s += sc.obs.bias_norm(sv, (j + 0.5) / N, (i + 0.5) / N);
    CHECK(std::abs(s / (N * N)) < 1e-3);
  }
}

TEST_CASE("station noise std matches sigma_obs within 5%") {
  ScenarioConfig cfg = tiny_config();
  cfg.n_train = 64;
  cfg.n_val = 16;
  cfg.n_test = 20;
  cfg.t_train = 80;
  cfg.sigma_obs = 0.05;
  SyntheticScenario sc = SyntheticScenario::build(cfg);
  double s2 = 0.0;
  int n = 0;
  for (int t = 0; t < 100; ++t) {
    StationSet obs = sc.make_station_obs(t);
    StationSet clean = sc.make_station_clean(t);
    for (int sv = 0; sv < kStationVars; ++sv)
      for (int m = 0; m < obs.count(); ++m) {
        const double z = (obs.value(sv, m) - clean.value(sv, m)) / sc.station_specs[sv].std;
        s2 += z * z;
        ++n;
      }
  }
  REQUIRE(n >= 10000);
  const double sigma_hat = std::sqrt(s2 / n);
  CHECK(sigma_hat == doctest::Approx(0.05).epsilon(0.05));
}

TEST_CASE("build_dataset: metadata honors configured splits") {
  ScenarioConfig cfg = tiny_config();
  cfg.t_train = 2;
  cfg.t_val = 1;
  cfg.t_test = 1;
  cfg.n_train = 1266;
  cfg.n_val = 200;
  cfg.n_test = 400;
  SyntheticScenario sc = SyntheticScenario::build(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "hyperds_ds_meta";
  std::filesystem::remove_all(dir);
  build_dataset(sc, dir.string());
  auto manifest = io::read_manifest(dir.string());
  CHECK(manifest.meta["station_splits"]["n_train"] == 1266);
  CHECK(manifest.meta["station_splits"]["n_val"] == 200);
  CHECK(manifest.meta["station_splits"]["n_test"] == 400);
  CHECK(manifest.meta["shapes"]["M"] == 1866);
  std::filesystem::remove_all(dir);
}

TEST_CASE("build_dataset: default desk-scale shapes") {
  ScenarioConfig cfg = tiny_config();  // default domain, small T for speed
  SyntheticScenario sc = SyntheticScenario::build(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "hyperds_ds_shapes";
  std::filesystem::remove_all(dir);
  build_dataset(sc, dir.string());
  auto manifest = io::read_manifest(dir.string());
  CHECK(manifest.meta["shapes"]["LH"] == 16);
  CHECK(manifest.meta["shapes"]["LW"] == 16);
  CHECK(manifest.meta["shapes"]["TH"] == 64);
  CHECK(manifest.meta["shapes"]["TW"] == 64);
  CHECK(manifest.meta["shapes"]["SH"] == 128);
  std::filesystem::remove_all(dir);
}

namespace {
std::uint64_t file_checksum(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}
}  // namespace

TEST_CASE("build_dataset: same seed gives byte-identical files") {
  ScenarioConfig cfg = tiny_config();
  SyntheticScenario sc = SyntheticScenario::build(cfg);
  const auto dir1 = std::filesystem::temp_directory_path() / "hyperds_ds_a";
  const auto dir2 = std::filesystem::temp_directory_path() / "hyperds_ds_b";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
  build_dataset(sc, dir1.string());
  build_dataset(SyntheticScenario::build(cfg), dir2.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir1)) {
    const auto name = entry.path().filename();
    CHECK(file_checksum(entry.path()) == file_checksum(dir2 / name));
  }
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("persisted dataset: downsample of stored HR reproduces stored LR bit-exactly") {
  ScenarioConfig cfg = tiny_config();
  SyntheticScenario sc = SyntheticScenario::build(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "hyperds_ds_nest";
  std::filesystem::remove_all(dir);
  build_dataset(sc, dir.string());
  auto bundle = io::read_dataset(dir.string());
  const auto& hr = bundle.get("hr_fields");
  const auto& lr = bundle.get("lr_fields");
  const int T = static_cast<int>(hr.shape[0]);
  const int k = sc.domain.factor();
  for (int t = 0; t < T; ++t) {
    FieldGrid g(sc.domain, Resolution::High, kGridVars);
    const float* src = hr.data.data() + static_cast<size_t>(t) * g.values.size();
    for (size_t i = 0; i < g.values.size(); ++i) g.values[i] = src[i];
    FieldGrid down = area_downsample(g, k);
    const float* lsrc = lr.data.data() + static_cast<size_t>(t) * down.values.size();
    for (size_t i = 0; i < down.values.size(); ++i)
      CHECK(static_cast<float>(down.values[i]) == lsrc[i]);
  }
  std::filesystem::remove_all(dir);
}
