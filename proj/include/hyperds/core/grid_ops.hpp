#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hyperds/core/domain.hpp"

namespace hyperds::core {

// Block-mean downsampling by an integer factor (>= 2). Inputs whose height or
// width is not divisible by the factor are a shape error.
FieldGrid area_downsample(const FieldGrid& grid, int factor);

// Bilinear interpolation anchored at cell centers. Queries between the domain
// edge and the first cell center use the boundary cell pair with the blend
// weight extrapolated, so fields affine in (lon, lat) reproduce exactly at any
// interior point. Out-of-domain queries throw DomainError.
// coords: Q pairs (lon, lat); result shaped (V, Q) row-major.
std::vector<double> bilinear_interpolate(const FieldGrid& grid,
                                         std::span<const std::array<double, 2>> coords);

// Single-point convenience overload; result shaped (V).
std::vector<double> bilinear_interpolate(const FieldGrid& grid, double lon, double lat);

// The 4-point stencil behind bilinear_interpolate: flat cell indices into the
// grid plane plus blend weights. Every consumer of interpolation values or
// gradients goes through this.
struct BilinStencil {
  std::array<int, 4> idx;
  std::array<double, 4> w;
};
std::vector<BilinStencil> bilinear_stencils(const FieldGrid& grid,
                                            std::span<const std::array<double, 2>> coords);

// Draws P inner points for high-res pixel (i, j): station coordinates first
// (flagged), then P - |stations| uniform points in the pixel rectangle.
// Deterministic under rng_seed. |stations| > P is a capacity error.
// Auxiliary values are not filled here; see attach_aux.
SubgridSampleSet sample_inner_points(const FieldGrid& hr_grid, int pixel_i, int pixel_j, int P,
                                     std::span<const std::array<double, 2>> stations_in_pixel,
                                     std::uint64_t rng_seed);

// Fills samples.aux with bilinear interpolation of `input` at the points.
void attach_aux(SubgridSampleSet& samples, const FieldGrid& input);

// (x - mean) / std per variable, in place. specs must cover grid.vars.
void normalize(FieldGrid& grid, std::span<const VariableSpec> specs);
void denormalize(FieldGrid& grid, std::span<const VariableSpec> specs);

// Same for flat (V, N) arrays.
void normalize(std::span<double> values, int vars, std::span<const VariableSpec> specs);
void denormalize(std::span<double> values, int vars, std::span<const VariableSpec> specs);

// Sum with pairwise (tree) reduction; the documented deterministic reduction
// order for losses and metrics.
double pairwise_sum(std::span<const double> xs);

}  // namespace hyperds::core
