#pragma once

#include <span>

#include "hyperds/core/grid_ops.hpp"

namespace hyperds::baselines {

using core::FieldGrid;

// Direct interpolation baseline: bilinear interpolation of a (physical-unit)
// field at the station coordinates, wind speed composed from the interpolated
// components. Returns (Vs, M) physical-unit station predictions.
std::vector<double> interp_baseline(const FieldGrid& field,
                                    std::span<const std::array<double, 2>> stations);

}  // namespace hyperds::baselines
