#include "hyperds/core/grid_ops.hpp"

#include <algorithm>
#include <cmath>

#include "hyperds/core/rng.hpp"

namespace hyperds::core {

FieldGrid area_downsample(const FieldGrid& grid, int factor) {
  if (factor < 2) throw ShapeError("area_downsample: factor must be >= 2");
  if (grid.height % factor != 0 || grid.width % factor != 0)
    throw ShapeError("area_downsample: grid shape not divisible by factor");

  FieldGrid out;
  out.domain = grid.domain;
  out.res = Resolution::Low;
  out.vars = grid.vars;
  out.height = grid.height / factor;
  out.width = grid.width / factor;
  out.values.assign(static_cast<size_t>(out.vars) * out.height * out.width, 0.0);

  const double inv = 1.0 / (static_cast<double>(factor) * factor);
  for (int v = 0; v < grid.vars; ++v)
    for (int i = 0; i < out.height; ++i)
      for (int j = 0; j < out.width; ++j) {
        double s = 0.0;
        for (int di = 0; di < factor; ++di)
          for (int dj = 0; dj < factor; ++dj)
            s += grid.at(v, i * factor + di, j * factor + dj);
        out.at(v, i, j) = s * inv;
      }
  return out;
}

namespace {

// Axis stencil: clamped index pair plus an (unclamped) blend weight.
inline void axis_stencil(double pos, double origin, double cell, int n, int& i0, double& t) {
  double u = (pos - origin) / cell - 0.5;
  if (n == 1) {
    i0 = 0;
    t = 0.0;
    return;
  }
  i0 = static_cast<int>(std::floor(u));
  i0 = std::clamp(i0, 0, n - 2);
  t = u - i0;
}

}  // namespace

std::vector<BilinStencil> bilinear_stencils(const FieldGrid& grid,
                                            std::span<const std::array<double, 2>> coords) {
  std::vector<BilinStencil> out(coords.size());
  const double cell = grid.cell_size();
  for (size_t q = 0; q < coords.size(); ++q) {
    const double lon = coords[q][0], lat = coords[q][1];
    if (!grid.domain.contains(lon, lat))
      throw DomainError("bilinear_interpolate: coordinate outside domain");
    int j0, i0;
    double tx, ty;
    axis_stencil(lon, grid.domain.lon_min, cell, grid.width, j0, tx);
    axis_stencil(lat, grid.domain.lat_min, cell, grid.height, i0, ty);
    const int j1 = std::min(j0 + 1, grid.width - 1);
    const int i1 = std::min(i0 + 1, grid.height - 1);
    out[q].idx = {i0 * grid.width + j0, i0 * grid.width + j1, i1 * grid.width + j0,
                  i1 * grid.width + j1};
    out[q].w = {(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty};
  }
  return out;
}

std::vector<double> bilinear_interpolate(const FieldGrid& grid,
                                         std::span<const std::array<double, 2>> coords) {
  const int Q = static_cast<int>(coords.size());
  const auto stencils = bilinear_stencils(grid, coords);
  std::vector<double> out(static_cast<size_t>(grid.vars) * Q, 0.0);
  const size_t plane = static_cast<size_t>(grid.height) * grid.width;
  for (int q = 0; q < Q; ++q) {
    const auto& s = stencils[q];
    for (int v = 0; v < grid.vars; ++v) {
      const double* p = grid.values.data() + static_cast<size_t>(v) * plane;
      out[static_cast<size_t>(v) * Q + q] =
          s.w[0] * p[s.idx[0]] + s.w[1] * p[s.idx[1]] + s.w[2] * p[s.idx[2]] + s.w[3] * p[s.idx[3]];
    }
  }
  return out;
}

std::vector<double> bilinear_interpolate(const FieldGrid& grid, double lon, double lat) {
  std::array<double, 2> c{lon, lat};
  return bilinear_interpolate(grid, std::span<const std::array<double, 2>>(&c, 1));
}

SubgridSampleSet sample_inner_points(const FieldGrid& hr_grid, int pixel_i, int pixel_j, int P,
                                     std::span<const std::array<double, 2>> stations_in_pixel,
                                     std::uint64_t rng_seed) {
  const int S = static_cast<int>(stations_in_pixel.size());
  if (P < 1) throw CapacityError("sample_inner_points: P must be >= 1");
  if (S > P) throw CapacityError("sample_inner_points: more stations than sample slots");

  const double cell = hr_grid.cell_size();
  const double lon_lo = hr_grid.domain.lon_min + pixel_j * cell;
  const double lat_lo = hr_grid.domain.lat_min + pixel_i * cell;

  SubgridSampleSet out;
  out.pixel_i = pixel_i;
  out.pixel_j = pixel_j;
  out.points.reserve(P);
  out.station_flag.reserve(P);
  for (const auto& s : stations_in_pixel) {
    if (s[0] < lon_lo || s[0] > lon_lo + cell || s[1] < lat_lo || s[1] > lat_lo + cell)
      throw DomainError("sample_inner_points: station not inside pixel rectangle");
    out.points.push_back(s);
    out.station_flag.push_back(1);
  }
  Rng rng(mix_seed(rng_seed, static_cast<std::uint64_t>(pixel_i),
                   static_cast<std::uint64_t>(pixel_j)));
  for (int p = S; p < P; ++p) {
    out.points.push_back({lon_lo + cell * rng.uniform(), lat_lo + cell * rng.uniform()});
    out.station_flag.push_back(0);
  }
  return out;
}

void attach_aux(SubgridSampleSet& samples, const FieldGrid& input) {
  samples.aux = bilinear_interpolate(
      input, std::span<const std::array<double, 2>>(samples.points.data(), samples.points.size()));
}

namespace {

void apply_affine(std::span<double> values, int vars, std::span<const VariableSpec> specs,
                  bool forward) {
  if (static_cast<int>(specs.size()) < vars)
    throw SpecError("normalize: missing variable spec");
  if (vars <= 0 || values.size() % vars != 0)
    throw ShapeError("normalize: values not divisible into variables");
  const size_t n = values.size() / vars;
  for (int v = 0; v < vars; ++v) {
    specs[v].validate();
    const double mean = specs[v].mean, std = specs[v].std;
    double* row = values.data() + static_cast<size_t>(v) * n;
    if (forward)
      for (size_t k = 0; k < n; ++k) row[k] = (row[k] - mean) / std;
    else
      for (size_t k = 0; k < n; ++k) row[k] = row[k] * std + mean;
  }
}

}  // namespace

void normalize(FieldGrid& grid, std::span<const VariableSpec> specs) {
  apply_affine(grid.values, grid.vars, specs, true);
}
void denormalize(FieldGrid& grid, std::span<const VariableSpec> specs) {
  apply_affine(grid.values, grid.vars, specs, false);
}
void normalize(std::span<double> values, int vars, std::span<const VariableSpec> specs) {
  apply_affine(values, vars, specs, true);
}
void denormalize(std::span<double> values, int vars, std::span<const VariableSpec> specs) {
  apply_affine(values, vars, specs, false);
}

double pairwise_sum(std::span<const double> xs) {
  const size_t n = xs.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const size_t half = n / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

}  // namespace hyperds::core
