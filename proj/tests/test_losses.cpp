#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hyperds/core/rng.hpp"
#include "hyperds/losses/losses.hpp"

using namespace hyperds;
using namespace hyperds::core;
using namespace hyperds::losses;

namespace {

DomainSpec dom() { return DomainSpec{0.0, 1.0, 0.0, 1.0, 0.25, 0.0625}; }

FieldGrid random_grid(Resolution r, std::uint64_t seed) {
  FieldGrid g(dom(), r, 2);
  Rng rng(seed);
  for (auto& x : g.values) x = rng.normal(0.0, 1.0);
  return g;
}

StationSet random_stations(int m, std::uint64_t seed, double dropout = 0.0) {
  StationSet s;
  s.vars = 3;
  Rng rng(seed);
  for (int i = 0; i < m; ++i) s.coords.push_back({rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)});
  s.split.assign(m, Split::Train);
  s.values.resize(3 * m);
  s.valid.resize(3 * m);
  for (size_t i = 0; i < s.values.size(); ++i) {
    s.values[i] = rng.normal(0.0, 1.0);
    s.valid[i] = rng.uniform() >= dropout ? 1 : 0;
  }
  return s;
}

}  // namespace

TEST_CASE("grid_loss basics and loop oracle") {
  FieldGrid a = random_grid(Resolution::High, 1);
  CHECK(grid_loss(a, a) == 0.0);

  FieldGrid b = a;
  for (auto& x : b.values) x += 2.0;
  CHECK(grid_loss(b, a) == doctest::Approx(4.0).epsilon(1e-14));

  FieldGrid c = random_grid(Resolution::High, 2);
  double s = 0.0;
  for (int v = 0; v < a.vars; ++v)
    for (int i = 0; i < a.height; ++i)
      for (int j = 0; j < a.width; ++j) {
        const double d = a.at(v, i, j) - c.at(v, i, j);
        s += d * d;
      }
  s /= a.vars * a.height * a.width;
  CHECK(grid_loss(a, c) == doctest::Approx(s).epsilon(1e-12));

  FieldGrid d = random_grid(Resolution::Low, 3);
  CHECK_THROWS_AS(grid_loss(a, d), ShapeError);
}

TEST_CASE("grid_loss_no_hr") {
  FieldGrid lr = random_grid(Resolution::Low, 4);

  SUBCASE("pred equal to bilinear upsample of input: only the LR term remains") {
    FieldGrid pred(dom(), Resolution::High, 2);
    std::vector<std::array<double, 2>> centers;
    for (int i = 0; i < pred.height; ++i)
      for (int j = 0; j < pred.width; ++j)
        centers.push_back({pred.center_lon(j), pred.center_lat(i)});
    auto up = bilinear_interpolate(
        lr, std::span<const std::array<double, 2>>(centers.data(), centers.size()));
    pred.values = up;
    FieldGrid down = area_downsample(pred, 4);
    double l_lr = 0.0;
    for (size_t i = 0; i < down.values.size(); ++i) {
      const double d = lr.values[i] - down.values[i];
      l_lr += d * d;
    }
    l_lr /= down.values.size();
    CHECK(grid_loss_no_hr(pred, lr) == doctest::Approx(l_lr).epsilon(1e-10));
  }

  SUBCASE("constant input and constant pred give zero") {
    FieldGrid lrc(dom(), Resolution::Low, 2);
    FieldGrid pred(dom(), Resolution::High, 2);
    for (auto& x : lrc.values) x = 1.25;
    for (auto& x : pred.values) x = 1.25;
    CHECK(grid_loss_no_hr(pred, lrc) == doctest::Approx(0.0).epsilon(1e-14));
  }

  SUBCASE("matches independent composition of core primitives") {
    FieldGrid pred = random_grid(Resolution::High, 5);
    std::vector<std::array<double, 2>> centers;
    for (int i = 0; i < pred.height; ++i)
      for (int j = 0; j < pred.width; ++j)
        centers.push_back({pred.center_lon(j), pred.center_lat(i)});
    auto up = bilinear_interpolate(
        lr, std::span<const std::array<double, 2>>(centers.data(), centers.size()));
    double l_hr = 0.0;
    for (size_t i = 0; i < up.size(); ++i) {
      const double d = up[i] - pred.values[i];
      l_hr += d * d;
    }
    l_hr /= up.size();
    FieldGrid down = area_downsample(pred, 4);
    double l_lr = 0.0;
    for (size_t i = 0; i < down.values.size(); ++i) {
      const double d = lr.values[i] - down.values[i];
      l_lr += d * d;
    }
    l_lr /= down.values.size();
    CHECK(grid_loss_no_hr(pred, lr) == doctest::Approx(l_hr + l_lr).epsilon(1e-12));
  }

  SUBCASE("non-nesting shapes rejected") {
    FieldGrid pred(dom(), Resolution::High, 2);  // 16x16
    FieldGrid lr3;                               // hand-built 3x3: 16 % 3 != 0
    lr3.domain = dom();
    lr3.res = Resolution::Low;
    lr3.vars = 2;
    lr3.height = 3;
    lr3.width = 3;
    lr3.values.assign(2 * 9, 0.0);
    CHECK_THROWS_AS(grid_loss_no_hr(pred, lr3), ShapeError);
  }
}

TEST_CASE("station_loss") {
  StationSet s = random_stations(12, 6);
  std::vector<double> pred(s.values);
  CHECK(station_loss(pred, s) == 0.0);

  SUBCASE("all-invalid mask is an error") {
    std::fill(s.valid.begin(), s.valid.end(), 0);
    CHECK_THROWS_AS(station_loss(pred, s), DegenerateLossError);
  }
  SUBCASE("masked case matches loop oracle") {
    StationSet sm = random_stations(12, 7, 0.3);
    Rng rng(8);
    std::vector<double> p(sm.values.size());
    for (auto& x : p) x = rng.normal(0.0, 1.0);
    double sum = 0.0;
    int n = 0;
    for (size_t i = 0; i < p.size(); ++i)
      if (sm.valid[i]) {
        const double d = p[i] - sm.values[i];
        sum += d * d;
        ++n;
      }
    CHECK(station_loss(p, sm) == doctest::Approx(sum / n).epsilon(1e-12));
  }
}

TEST_CASE("total_loss composition") {
  LossConfig cfg;
  cfg.beta = 0.05;
  CHECK(total_loss(1.0, 2.0, cfg) == doctest::Approx(1.1).epsilon(1e-14));
  cfg.beta = 0.0;
  CHECK(total_loss(0.7, 123.0, cfg) == 0.7);
  cfg.beta = 1.0;
  CHECK(total_loss(0.0, 0.42, cfg) == doctest::Approx(0.42));
  cfg.beta = -0.1;
  CHECK_THROWS_AS(total_loss(1.0, 1.0, cfg), ConfigError);
}

TEST_CASE("total_loss monotone in both arguments for beta >= 0") {
  LossConfig cfg;
  cfg.beta = 0.3;
  Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    const double g = rng.uniform(0.0, 5.0), s = rng.uniform(0.0, 5.0);
    const double dg = rng.uniform(0.0, 1.0), ds = rng.uniform(0.0, 1.0);
    CHECK(total_loss(g + dg, s, cfg) >= total_loss(g, s, cfg));
    CHECK(total_loss(g, s + ds, cfg) >= total_loss(g, s, cfg));
  }
}

TEST_CASE("mse_mae trivial and loop oracle") {
  std::vector<double> a = {1.0, 2.0, 3.0};
  auto [mse0, mae0] = mse_mae(a, a);
  CHECK(mse0 == 0.0);
  CHECK(mae0 == 0.0);

  std::vector<double> b = {4.0, 5.0, 6.0};
  auto [mse3, mae3] = mse_mae(b, a);
  CHECK(mse3 == doctest::Approx(9.0));
  CHECK(mae3 == doctest::Approx(3.0));

  Rng rng(10);
  const int M = 17, T = 9;
  std::vector<double> p(M * T), t(M * T);
  for (auto& x : p) x = rng.normal(0.0, 2.0);
  for (auto& x : t) x = rng.normal(0.0, 2.0);
  double se = 0.0, ae = 0.0;
  for (int i = 0; i < M; ++i)
    for (int tt = 0; tt < T; ++tt) {
      const double d = p[i * T + tt] - t[i * T + tt];
      se += d * d;
      ae += std::abs(d);
    }
  auto [mse, mae] = mse_mae(p, t);
  CHECK(mse == doctest::Approx(se / (M * T)).epsilon(1e-12));
  CHECK(mae == doctest::Approx(ae / (M * T)).epsilon(1e-12));

  std::vector<std::uint8_t> mask(M * T, 0);
  CHECK_THROWS_AS(mse_mae(p, t, mask), DegenerateLossError);
}

TEST_CASE("Jensen: MSE >= MAE^2 on any dataset") {
  Rng rng(11);
  for (int k = 0; k < 30; ++k) {
    const int n = 5 + static_cast<int>(rng.below(50));
    std::vector<double> p(n), t(n);
    for (auto& x : p) x = rng.normal(0.0, 3.0);
    for (auto& x : t) x = rng.normal(0.5, 1.0);
    auto [mse, mae] = mse_mae(p, t);
    CHECK(mse >= 0.0);
    CHECK(mae >= 0.0);
    CHECK(mse + 1e-12 >= mae * mae);
  }
}

TEST_CASE("losses invariant under station permutation") {
  StationSet s = random_stations(10, 12);
  Rng rng(13);
  std::vector<double> pred(s.values.size());
  for (auto& x : pred) x = rng.normal(0.0, 1.0);
  const double base = station_loss(pred, s);

  // permute stations consistently in pred and label
  std::vector<int> perm(10);
  for (int i = 0; i < 10; ++i) perm[i] = i;
  for (int i = 9; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
  StationSet s2 = s;
  std::vector<double> pred2(pred.size());
  for (int v = 0; v < 3; ++v)
    for (int m = 0; m < 10; ++m) {
      s2.value(v, m) = s.value(v, perm[m]);
      s2.is_valid(v, m) = s.is_valid(v, perm[m]);
      s2.coords[m] = s.coords[perm[m]];
      pred2[static_cast<size_t>(v) * 10 + m] = pred[static_cast<size_t>(v) * 10 + perm[m]];
    }
  CHECK(station_loss(pred2, s2) == doctest::Approx(base).epsilon(1e-12));
}
