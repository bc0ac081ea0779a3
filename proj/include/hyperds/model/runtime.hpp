#pragma once

#include <span>

#include "hyperds/core/grid_ops.hpp"
#include "hyperds/model/hyperds.hpp"

namespace hyperds::model {

using core::DomainSpec;
using core::FieldGrid;
using core::VariableSpec;

// Points routed and sorted for one decode call, with the column permutation
// needed to map results back to callers' point order.
template <class S>
struct RoutedPoints {
  DecodeBatch<S> batch;
  std::vector<int> col_of_point;  // original point index -> column in X
};

// Builds decoder inputs for arbitrary points: Fourier features of the
// normalized coordinates plus bilinear-interpolated input values. Points
// outside the domain are a routing error.
template <class S>
RoutedPoints<S> route_points(const HyperDS<S>& model, const FieldGrid& lr_norm,
                             std::span<const std::array<double, 2>> pts) {
  const auto& cfg = model.config();
  const auto& dom = lr_norm.domain;
  const int n = static_cast<int>(pts.size());
  const bool blocked = cfg.decoder_variant() == DecoderVariant::MultiBlock;
  const int nb = model.n_blocks();

  std::vector<int> block(n, 0);
  std::vector<int> counts(nb, 0);
  for (int i = 0; i < n; ++i) {
    if (!dom.contains(pts[i][0], pts[i][1]))
      throw DomainError("route_points: point outside every block");
    if (blocked)
      block[i] = block_of_point(dom.norm_x(pts[i][0]), dom.norm_y(pts[i][1]), cfg.blocks_x,
                                cfg.blocks_y);
    ++counts[block[i]];
  }

  RoutedPoints<S> out;
  out.batch.block_ranges.resize(nb);
  std::vector<int> cursor(nb, 0);
  int off = 0;
  for (int k = 0; k < nb; ++k) {
    out.batch.block_ranges[k] = {off, counts[k]};
    cursor[k] = off;
    off += counts[k];
  }
  out.col_of_point.resize(n);
  for (int i = 0; i < n; ++i) out.col_of_point[i] = cursor[block[i]]++;

  const auto aux = core::bilinear_interpolate(lr_norm, pts);
  out.batch.X.resize(model.point_dim(), n);
  std::vector<double> aux_pt(lr_norm.vars);
  for (int i = 0; i < n; ++i) {
    for (int v = 0; v < lr_norm.vars; ++v) aux_pt[v] = aux[static_cast<size_t>(v) * n + i];
    fill_point_features(out.batch.X.col(out.col_of_point[i]).data(), dom.norm_x(pts[i][0]),
                        dom.norm_y(pts[i][1]), aux_pt.data(), lr_norm.vars,
                        cfg.fourier_freqs);
  }
  return out;
}

// Composes normalized station-variable predictions from normalized decoded
// grid variables: wind speed from (u10, v10) in physical units, the rest by
// an affine respec. Differentiable; backward scatters into the decode grad.
template <class S>
class StationComposer {
 public:
  StationComposer(std::span<const VariableSpec> grid_specs,
                  std::span<const VariableSpec> station_specs)
      : gs_(grid_specs.begin(), grid_specs.end()),
        ss_(station_specs.begin(), station_specs.end()) {}

  // dec: (V, M) normalized decodes -> (Vs, M) normalized station predictions
  Mat<S> forward(const Mat<S>& dec) const {
    const Eigen::Index M = dec.cols();
    Mat<S> out(core::kStationVars, M);
    for (Eigen::Index m = 0; m < M; ++m) {
      const double u = gs_[core::kVarU10].mean + gs_[core::kVarU10].std * dec(core::kVarU10, m);
      const double v = gs_[core::kVarV10].mean + gs_[core::kVarV10].std * dec(core::kVarV10, m);
      const double ws = std::sqrt(u * u + v * v);
      out(core::kStnWs, m) =
          static_cast<S>((ws - ss_[core::kStnWs].mean) / ss_[core::kStnWs].std);
      out(core::kStnSp, m) = respec(dec(core::kVarSp, m), core::kVarSp, core::kStnSp);
      out(core::kStnT2m, m) = respec(dec(core::kVarT2m, m), core::kVarT2m, core::kStnT2m);
      out(core::kStnTp, m) = respec(dec(core::kVarTp, m), core::kVarTp, core::kStnTp);
    }
    return out;
  }

  // dstn: (Vs, M) gradient wrt station predictions; returns (V, M) gradient
  // wrt decoded grid variables.
  Mat<S> backward(const Mat<S>& dec, const Mat<S>& dstn) const {
    const Eigen::Index M = dec.cols();
    Mat<S> ddec = Mat<S>::Zero(core::kGridVars, M);
    for (Eigen::Index m = 0; m < M; ++m) {
      const double u = gs_[core::kVarU10].mean + gs_[core::kVarU10].std * dec(core::kVarU10, m);
      const double v = gs_[core::kVarV10].mean + gs_[core::kVarV10].std * dec(core::kVarV10, m);
      const double ws = std::max(std::sqrt(u * u + v * v), 1e-9);
      const double dws = static_cast<double>(dstn(core::kStnWs, m)) / ss_[core::kStnWs].std;
      ddec(core::kVarU10, m) = static_cast<S>(dws * (u / ws) * gs_[core::kVarU10].std);
      ddec(core::kVarV10, m) = static_cast<S>(dws * (v / ws) * gs_[core::kVarV10].std);
      ddec(core::kVarSp, m) = dstn(core::kStnSp, m) * dspec(core::kVarSp, core::kStnSp);
      ddec(core::kVarT2m, m) = dstn(core::kStnT2m, m) * dspec(core::kVarT2m, core::kStnT2m);
      ddec(core::kVarTp, m) = dstn(core::kStnTp, m) * dspec(core::kVarTp, core::kStnTp);
    }
    return ddec;
  }

 private:
  S respec(S x, int gv, int sv) const {
    const double phys = gs_[gv].mean + gs_[gv].std * static_cast<double>(x);
    return static_cast<S>((phys - ss_[sv].mean) / ss_[sv].std);
  }
  S dspec(int gv, int sv) const { return static_cast<S>(gs_[gv].std / ss_[sv].std); }

  std::vector<VariableSpec> gs_, ss_;
};

// Eq.-5 style grid forward: P inner samples per high-res pixel (any supplied
// station coordinates replacing random slots in their pixel), pixel value =
// mean of the pointwise decodes. forward_hyper must already have run for the
// slot. Returns the normalized prediction grid.
template <class S>
FieldGrid forward_grid(HyperDS<S>& model, int slot, const FieldGrid& lr_norm, int P,
                       std::uint64_t seed,
                       std::span<const std::array<double, 2>> stations = {}) {
  const auto& dims = model.data_dims();
  FieldGrid hr_proto(lr_norm.domain, core::Resolution::High, dims.V);

  std::vector<std::vector<std::array<double, 2>>> by_pixel(
      static_cast<size_t>(dims.TH) * dims.TW);
  const double cell = hr_proto.cell_size();
  for (const auto& s : stations) {
    const int j = std::min(static_cast<int>((s[0] - hr_proto.domain.lon_min) / cell), dims.TW - 1);
    const int i = std::min(static_cast<int>((s[1] - hr_proto.domain.lat_min) / cell), dims.TH - 1);
    by_pixel[static_cast<size_t>(i) * dims.TW + j].push_back(s);
  }

  std::vector<std::array<double, 2>> pts;
  pts.reserve(static_cast<size_t>(dims.TH) * dims.TW * P);
  for (int i = 0; i < dims.TH; ++i)
    for (int j = 0; j < dims.TW; ++j) {
      const auto& stn = by_pixel[static_cast<size_t>(i) * dims.TW + j];
      auto set = core::sample_inner_points(
          hr_proto, i, j, P, std::span<const std::array<double, 2>>(stn.data(), stn.size()),
          seed);
      pts.insert(pts.end(), set.points.begin(), set.points.end());
    }

  auto routed = route_points(model, lr_norm, pts);
  Mat<S> Y = model.decode(slot, routed.batch);

  FieldGrid out = hr_proto;
  for (int v = 0; v < dims.V; ++v) {
    size_t p = 0;
    for (int i = 0; i < dims.TH; ++i)
      for (int j = 0; j < dims.TW; ++j) {
        double acc = 0.0;
        for (int s = 0; s < P; ++s, ++p) acc += static_cast<double>(Y(v, routed.col_of_point[p]));
        out.at(v, i, j) = acc / P;
      }
  }
  return out;
}

// Pointwise decode at station coordinates with wind-speed composition.
// Returns (Vs, M) normalized predictions.
template <class S>
Mat<S> forward_stations(HyperDS<S>& model, int slot, const FieldGrid& lr_norm,
                        std::span<const std::array<double, 2>> coords,
                        std::span<const VariableSpec> grid_specs,
                        std::span<const VariableSpec> station_specs) {
  auto routed = route_points(model, lr_norm, coords);
  Mat<S> Y = model.decode(slot, routed.batch);
  Mat<S> dec(Y.rows(), Y.cols());
  for (size_t i = 0; i < routed.col_of_point.size(); ++i)
    dec.col(static_cast<Eigen::Index>(i)) = Y.col(routed.col_of_point[i]);
  return StationComposer<S>(grid_specs, station_specs).forward(dec);
}

}  // namespace hyperds::model
