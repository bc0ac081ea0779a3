#pragma once

#include "hyperds/model/runtime.hpp"

namespace hyperds::train {

using core::FieldGrid;
using nn::Mat;

struct StepOptions {
  int P = 10;
  double pixel_fraction = 1.0;  // high-res pixels supervised per step (HR mode)
  std::uint64_t sample_seed = 0;
  bool hr_supervision = true;
  double beta = 0.05;
  bool backward = false;
  double loss_weight = 1.0;  // gradient scale (1/batch for mean-over-batch)
};

// One sample of a training batch, already normalized.
template <class S>
struct SampleData {
  Mat<S> lr;              // (V, LH*LW)
  Mat<S> sat;             // (frames*channels, SH*SW)
  FieldGrid lr_norm;      // same values as lr, as a grid (aux interpolation)
  const Mat<S>* hr = nullptr;  // (V, TH*TW) labels; may be null in no-HR mode
  std::vector<std::array<double, 2>> stn_coords;  // train stations
  Mat<S> stn_values;                              // (Vs, M) normalized observations
  std::vector<std::uint8_t> stn_valid;            // (Vs*M), row-major (v, m)
};

struct StepResult {
  double grid_loss = 0.0;
  double station_loss = 0.0;
  double total = 0.0;
};

// Forward (and optionally backward) for one sample: subgrid-sampled grid
// supervision plus station supervision, exactly the math the gradient checks
// probe. forward_hyper is invoked here; the caller owns the optimizer step.
template <class S>
StepResult run_sample_step(model::HyperDS<S>& m, int slot, const SampleData<S>& sample,
                           const model::StationComposer<S>& composer, const StepOptions& opt) {
  const auto& dims = m.data_dims();
  const auto& dom = sample.lr_norm.domain;
  if (opt.P < 1) throw ConfigError("step: P must be >= 1");
  if (!opt.hr_supervision && opt.pixel_fraction < 1.0)
    throw ConfigError("step: no-HR losses need full pixel coverage");
  if (opt.hr_supervision && sample.hr == nullptr)
    throw ConfigError("step: HR supervision requested without labels");

  m.forward_hyper(slot, sample.lr, sample.sat);

  // pixel selection
  FieldGrid hr_proto(dom, core::Resolution::High, dims.V);
  const double cell = hr_proto.cell_size();
  std::vector<int> pixels;
  {
    Rng rng(mix_seed(opt.sample_seed, 0xA1));
    for (int p = 0; p < dims.TH * dims.TW; ++p)
      if (opt.pixel_fraction >= 1.0 || rng.uniform() < opt.pixel_fraction) pixels.push_back(p);
    if (pixels.empty()) pixels.push_back(0);
  }
  const int n_sel = static_cast<int>(pixels.size());

  // train stations grouped by pixel (they replace random sample slots)
  const int M = static_cast<int>(sample.stn_coords.size());
  std::vector<std::vector<std::array<double, 2>>> by_pixel(
      static_cast<size_t>(dims.TH) * dims.TW);
  for (const auto& s : sample.stn_coords) {
    const int j = std::min(static_cast<int>((s[0] - dom.lon_min) / cell), dims.TW - 1);
    const int i = std::min(static_cast<int>((s[1] - dom.lat_min) / cell), dims.TH - 1);
    by_pixel[static_cast<size_t>(i) * dims.TW + j].push_back(s);
  }

  // merged point list: P per selected pixel, then one per train station
  std::vector<std::array<double, 2>> pts;
  pts.reserve(static_cast<size_t>(n_sel) * opt.P + M);
  for (int p : pixels) {
    const int i = p / dims.TW, j = p % dims.TW;
    const auto& stn = by_pixel[static_cast<size_t>(p)];
    auto set = core::sample_inner_points(
        hr_proto, i, j, opt.P,
        std::span<const std::array<double, 2>>(stn.data(), stn.size()), opt.sample_seed);
    pts.insert(pts.end(), set.points.begin(), set.points.end());
  }
  const int station_offset = static_cast<int>(pts.size());
  pts.insert(pts.end(), sample.stn_coords.begin(), sample.stn_coords.end());

  auto routed = model::route_points(m, sample.lr_norm, pts);
  Mat<S> Y = m.decode(slot, routed.batch);

  // pixel means
  Mat<S> pred(dims.V, n_sel);
  for (int k = 0; k < n_sel; ++k) {
    Eigen::Matrix<S, Eigen::Dynamic, 1> acc = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(dims.V);
    for (int s = 0; s < opt.P; ++s)
      acc += Y.col(routed.col_of_point[static_cast<size_t>(k) * opt.P + s]);
    pred.col(k) = acc / static_cast<S>(opt.P);
  }

  StepResult res;
  Mat<S> dpred = Mat<S>::Zero(dims.V, n_sel);
  if (opt.hr_supervision) {
    double acc = 0.0;
    const double inv = 1.0 / (static_cast<double>(dims.V) * n_sel);
    for (int k = 0; k < n_sel; ++k)
      for (int v = 0; v < dims.V; ++v) {
        const double d =
            static_cast<double>(pred(v, k)) - static_cast<double>((*sample.hr)(v, pixels[k]));
        acc += d * d;
        dpred(v, k) = static_cast<S>(2.0 * d * inv);
      }
    res.grid_loss = acc * inv;
  } else {
    // L_HR: against the bilinear-upsampled input
    std::vector<std::array<double, 2>> centers(static_cast<size_t>(dims.TH) * dims.TW);
    for (int i = 0; i < dims.TH; ++i)
      for (int j = 0; j < dims.TW; ++j)
        centers[static_cast<size_t>(i) * dims.TW + j] = {hr_proto.center_lon(j),
                                                         hr_proto.center_lat(i)};
    const auto up = core::bilinear_interpolate(
        sample.lr_norm,
        std::span<const std::array<double, 2>>(centers.data(), centers.size()));
    const size_t nhr = centers.size();
    double acc_hr = 0.0;
    const double inv_hr = 1.0 / (static_cast<double>(dims.V) * nhr);
    for (int k = 0; k < n_sel; ++k)
      for (int v = 0; v < dims.V; ++v) {
        const double d = static_cast<double>(pred(v, k)) -
                         up[static_cast<size_t>(v) * nhr + pixels[k]];
        acc_hr += d * d;
        dpred(v, k) += static_cast<S>(2.0 * d * inv_hr);
      }
    // L_LR: block means of the prediction against the input
    const int kf = dims.factor();
    const int LHW = dims.LH * dims.LW;
    Mat<S> down = Mat<S>::Zero(dims.V, LHW);
    for (int k = 0; k < n_sel; ++k) {
      const int i = pixels[k] / dims.TW, j = pixels[k] % dims.TW;
      down.col(static_cast<Eigen::Index>(i / kf) * dims.LW + j / kf) +=
          pred.col(k) / static_cast<S>(kf * kf);
    }
    double acc_lr = 0.0;
    const double inv_lr = 1.0 / (static_cast<double>(dims.V) * LHW);
    Mat<S> ddown(dims.V, LHW);
    for (int c = 0; c < LHW; ++c)
      for (int v = 0; v < dims.V; ++v) {
        const double d =
            static_cast<double>(down(v, c)) - static_cast<double>(sample.lr(v, c));
        acc_lr += d * d;
        ddown(v, c) = static_cast<S>(2.0 * d * inv_lr);
      }
    for (int k = 0; k < n_sel; ++k) {
      const int i = pixels[k] / dims.TW, j = pixels[k] % dims.TW;
      dpred.col(k) +=
          ddown.col(static_cast<Eigen::Index>(i / kf) * dims.LW + j / kf) /
          static_cast<S>(kf * kf);
    }
    res.grid_loss = acc_hr * inv_hr + acc_lr * inv_lr;
  }

  // station loss
  Mat<S> dstn;
  Mat<S> dec_stn;
  if (M > 0) {
    dec_stn.resize(dims.V, M);
    for (int s = 0; s < M; ++s)
      dec_stn.col(s) = Y.col(routed.col_of_point[static_cast<size_t>(station_offset) + s]);
    Mat<S> stn_pred = composer.forward(dec_stn);
    int n_valid = 0;
    double acc = 0.0;
    for (int v = 0; v < dims.Vs; ++v)
      for (int s = 0; s < M; ++s)
        if (sample.stn_valid[static_cast<size_t>(v) * M + s]) ++n_valid;
    if (n_valid == 0) throw DegenerateLossError("step: no valid station entries");
    dstn = Mat<S>::Zero(dims.Vs, M);
    const double inv = 1.0 / n_valid;
    for (int v = 0; v < dims.Vs; ++v)
      for (int s = 0; s < M; ++s) {
        if (!sample.stn_valid[static_cast<size_t>(v) * M + s]) continue;
        const double d =
            static_cast<double>(stn_pred(v, s)) - static_cast<double>(sample.stn_values(v, s));
        acc += d * d;
        dstn(v, s) = static_cast<S>(2.0 * d * inv);
      }
    res.station_loss = acc * inv;
  }
  res.total = res.grid_loss + opt.beta * res.station_loss;

  if (opt.backward) {
    Mat<S> dY = Mat<S>::Zero(Y.rows(), Y.cols());
    const S w = static_cast<S>(opt.loss_weight);
    for (int k = 0; k < n_sel; ++k) {
      const auto dcol = dpred.col(k) * (w / static_cast<S>(opt.P));
      for (int s = 0; s < opt.P; ++s)
        dY.col(routed.col_of_point[static_cast<size_t>(k) * opt.P + s]) += dcol;
    }
    if (M > 0) {
      Mat<S> ddec = composer.backward(dec_stn, dstn);
      const S bw = static_cast<S>(opt.beta * opt.loss_weight);
      for (int s = 0; s < M; ++s)
        dY.col(routed.col_of_point[static_cast<size_t>(station_offset) + s]) +=
            bw * ddec.col(s);
    }
    m.decode_backward(slot, routed.batch, dY);
    m.backward_hyper(slot);
  }
  return res;
}

}  // namespace hyperds::train
