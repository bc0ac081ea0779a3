#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hyperds/core/error.hpp"
#include "hyperds/core/rng.hpp"
#include "hyperds/io/checkpoint.hpp"
#include "hyperds/io/dataset.hpp"
#include "hyperds/io/metrics_csv.hpp"

using namespace hyperds;
using namespace hyperds::io;

namespace {

std::filesystem::path fresh_dir(const char* name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  return dir;
}

TensorRecord random_record(const std::string& name, std::vector<std::int64_t> shape,
                           std::uint64_t seed) {
  TensorRecord r;
  r.name = name;
  r.shape = std::move(shape);
  r.data.resize(r.element_count());
  Rng rng(seed);
  for (auto& x : r.data) x = static_cast<float>(rng.normal(0.0, 1.0));
  return r;
}

}  // namespace

TEST_CASE("dataset round-trip is bitwise exact") {
  auto dir = fresh_dir("hyperds_io_rt");
  std::vector<TensorRecord> records = {random_record("alpha", {2, 3, 4}, 1),
                                       random_record("beta", {7}, 2)};
  DatasetManifest m;
  m.meta = {{"note", "test"}};
  for (const auto& r : records) m.index.push_back({r.name, r.shape});
  write_dataset(records, m, dir.string());

  auto bundle = read_dataset(dir.string());
  CHECK(bundle.manifest.meta["note"] == "test");
  for (const auto& r : records) {
    const auto& got = bundle.get(r.name);
    CHECK(got.shape == r.shape);
    REQUIRE(got.data.size() == r.data.size());
    for (size_t i = 0; i < r.data.size(); ++i) CHECK(got.data[i] == r.data[i]);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset read errors are distinct and name the file") {
  auto dir = fresh_dir("hyperds_io_err");
  std::vector<TensorRecord> records = {random_record("alpha", {4, 4}, 3)};
  DatasetManifest m;
  for (const auto& r : records) m.index.push_back({r.name, r.shape});
  write_dataset(records, m, dir.string());

  SUBCASE("truncated payload -> LengthError naming the file") {
    std::filesystem::resize_file(dir / "alpha.f32", 4 * 16 - 1);
    try {
      read_dataset(dir.string());
      FAIL("expected LengthError");
    } catch (const LengthError& e) {
      CHECK(std::string(e.what()).find("alpha.f32") != std::string::npos);
    }
  }
  SUBCASE("missing payload -> MissingFileError") {
    std::filesystem::remove(dir / "alpha.f32");
    CHECK_THROWS_AS(read_dataset(dir.string()), MissingFileError);
  }
  SUBCASE("unknown version -> VersionError, no partial read") {
    auto j = manifest_to_json(m);
    j["format_version"] = 99;
    std::ofstream(dir / "manifest") << j.dump(2);
    // also delete the payload: a version error must trigger before any
    // payload access
    std::filesystem::remove(dir / "alpha.f32");
    CHECK_THROWS_AS(read_dataset(dir.string()), VersionError);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("write refuses a locked directory") {
  auto dir = fresh_dir("hyperds_io_lock");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / ".lock") << "";
  std::vector<TensorRecord> records = {random_record("alpha", {2}, 4)};
  DatasetManifest m;
  m.index.push_back({"alpha", {2}});
  CHECK_THROWS_AS(write_dataset(records, m, dir.string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint round-trip preserves params and metadata exactly") {
  auto dir = fresh_dir("hyperds_io_ckpt");
  CheckpointBundle b;
  b.model_config = {{"variant", "multi_block"}, {"feature_channels", 8}};
  b.config_hash = config_hash_of(b.model_config);
  b.epoch = 17;
  b.val_station_loss = 0.03125;
  b.params.push_back(random_record("enc.w", {4, 3}, 5));
  b.params.push_back(random_record("enc.b", {4}, 6));
  write_checkpoint(b, dir.string());

  auto got = read_checkpoint(dir.string());
  CHECK(got.epoch == 17);
  CHECK(got.val_station_loss == 0.03125);
  CHECK(got.config_hash == b.config_hash);
  CHECK(got.model_config == b.model_config);
  for (const auto& p : b.params) {
    const auto& q = got.param(p.name);
    REQUIRE(q.data.size() == p.data.size());
    for (size_t i = 0; i < p.data.size(); ++i) CHECK(q.data[i] == p.data[i]);  // 0 ulps
  }
  CHECK_THROWS_AS(got.param("enc.missing"), BundleSchemaError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("metrics csv schema and round-trip") {
  auto dir = fresh_dir("hyperds_io_csv");
  std::filesystem::create_directories(dir);
  const auto path = (dir / "metrics.csv").string();
  std::vector<MetricsRow> rows = {{"interp_lr", "wind_speed", 0.5, 0.4, 40, 40},
                                  {"hyperds", "t2m", 0.125, 0.25, 40, 40}};
  write_metrics_csv(path, rows);
  {
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "method,variable,mse,mae,n_stations,n_times");
  }
  auto got = read_metrics_csv(path);
  REQUIRE(got.size() == 2);
  CHECK(got[0].method == "interp_lr");
  CHECK(got[0].mse == 0.5);
  CHECK(got[1].variable == "t2m");
  CHECK(got[1].n_times == 40);
  std::filesystem::remove_all(dir);
}

TEST_CASE("curves csv round-trip") {
  auto dir = fresh_dir("hyperds_io_curves");
  std::filesystem::create_directories(dir);
  const auto path = (dir / "curves.csv").string();
  write_curves_csv(path, {{1, 0.5, 0.25, 0.3}, {2, 0.4, 0.2, 0.28}});
  auto got = read_curves_csv(path);
  REQUIRE(got.size() == 2);
  CHECK(got[1].epoch == 2);
  CHECK(got[1].val_station_loss == 0.28);
  std::filesystem::remove_all(dir);
}
