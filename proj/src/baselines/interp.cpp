#include "hyperds/baselines/interp.hpp"

#include <cmath>

#include "hyperds/core/domain.hpp"

namespace hyperds::baselines {

std::vector<double> interp_baseline(const FieldGrid& field,
                                    std::span<const std::array<double, 2>> stations) {
  if (field.vars != core::kGridVars)
    throw ShapeError("interp_baseline: expected the full grid variable roster");
  const int M = static_cast<int>(stations.size());
  const auto vals = core::bilinear_interpolate(field, stations);
  std::vector<double> out(static_cast<size_t>(core::kStationVars) * M);
  for (int m = 0; m < M; ++m) {
    const double u = vals[static_cast<size_t>(core::kVarU10) * M + m];
    const double v = vals[static_cast<size_t>(core::kVarV10) * M + m];
    out[static_cast<size_t>(core::kStnWs) * M + m] = std::hypot(u, v);
    out[static_cast<size_t>(core::kStnSp) * M + m] =
        vals[static_cast<size_t>(core::kVarSp) * M + m];
    out[static_cast<size_t>(core::kStnT2m) * M + m] =
        vals[static_cast<size_t>(core::kVarT2m) * M + m];
    out[static_cast<size_t>(core::kStnTp) * M + m] =
        vals[static_cast<size_t>(core::kVarTp) * M + m];
  }
  return out;
}

}  // namespace hyperds::baselines
