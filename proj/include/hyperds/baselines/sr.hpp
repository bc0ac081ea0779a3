#pragma once

#include "hyperds/model/runtime.hpp"
#include "hyperds/nn/layers.hpp"
#include "hyperds/train/step.hpp"

namespace hyperds::baselines {

using model::DataDims;
using nn::Mat;
using nn::Vec;

struct SRBaselineConfig {
  std::string arch = "unet";  // unet | edsr
  int upscale = 4;            // must match the dataset nesting factor
  bool obs_concat = true;     // concatenate encoded satellite frames
  int sat_enc_channels = 8;   // channels after the single satellite conv
  int unet_base = 32;         // 3 down/up levels
  int edsr_blocks = 8;
  int edsr_width = 64;

  void validate(const DataDims& d) const {
    if (arch != "unet" && arch != "edsr") throw ConfigError("sr: arch must be unet or edsr");
    if (upscale != d.factor()) throw ConfigError("sr: upscale must match the dataset factor");
    if (d.LH % 4 != 0 || d.LW % 4 != 0)
      throw ConfigError("sr: unet needs the low-res grid divisible by 4");
    if (d.SH % d.LH != 0 || d.SW % d.LW != 0)
      throw ConfigError("sr: satellite grid must nest with the low-res grid");
  }
};

// conv-gn-gelu twice
template <class S>
class DoubleConv {
 public:
  DoubleConv() = default;
  DoubleConv(nn::ParamRegistry<S>& reg, const std::string& name, int cin, int cout)
      : c1_(reg, name + ".c1", cin, cout, 3, 1, 1),
        g1_(reg, name + ".g1", cout, cout % 8 == 0 ? 8 : 1),
        c2_(reg, name + ".c2", cout, cout, 3, 1, 1),
        g2_(reg, name + ".g2", cout, cout % 8 == 0 ? 8 : 1) {}

  void begin(int n) {
    c1_.begin(n);
    g1_.begin(n);
    a1_.begin(n);
    c2_.begin(n);
    g2_.begin(n);
    a2_.begin(n);
  }
  Mat<S> forward(int slot, const Mat<S>& x, int H, int W) {
    Mat<S> h = a1_.forward(slot, g1_.forward(slot, c1_.forward(slot, x, H, W)));
    return a2_.forward(slot, g2_.forward(slot, c2_.forward(slot, h, H, W)));
  }
  Mat<S> backward(int slot, const Mat<S>& dy) {
    Mat<S> d = c2_.backward(slot, g2_.backward(slot, a2_.backward(slot, dy)));
    return c1_.backward(slot, g1_.backward(slot, a1_.backward(slot, d)));
  }

 private:
  nn::Conv2d<S> c1_, c2_;
  nn::GroupNorm<S> g1_, g2_;
  nn::GELU<S> a1_, a2_;
};

// (C*r^2, H, W) -> (C, H*r, W*r); fixed permutation
template <class S>
class PixelShuffle {
 public:
  PixelShuffle() = default;
  PixelShuffle(int channels, int r, int H, int W) : c_(channels), r_(r), h_(H), w_(W) {}

  Mat<S> forward(const Mat<S>& x) const {
    Mat<S> y(c_, static_cast<Eigen::Index>(h_) * r_ * w_ * r_);
    for (int c = 0; c < c_; ++c)
      for (int i = 0; i < h_ * r_; ++i)
        for (int j = 0; j < w_ * r_; ++j)
          y(c, static_cast<Eigen::Index>(i) * w_ * r_ + j) =
              x(c * r_ * r_ + (i % r_) * r_ + (j % r_),
                static_cast<Eigen::Index>(i / r_) * w_ + j / r_);
    return y;
  }
  Mat<S> backward(const Mat<S>& dy) const {
    Mat<S> dx(c_ * r_ * r_, static_cast<Eigen::Index>(h_) * w_);
    for (int c = 0; c < c_; ++c)
      for (int i = 0; i < h_ * r_; ++i)
        for (int j = 0; j < w_ * r_; ++j)
          dx(c * r_ * r_ + (i % r_) * r_ + (j % r_),
             static_cast<Eigen::Index>(i / r_) * w_ + j / r_) =
              dy(c, static_cast<Eigen::Index>(i) * w_ * r_ + j);
    return dx;
  }

 private:
  int c_ = 0, r_ = 1, h_ = 0, w_ = 0;
};

// Observation-augmented super-resolution: satellite frames encoded by one
// convolution, average-pooled onto the input grid, concatenated with the
// fields, then a UNet or EDSR body maps to the high-res grid. A bilinear
// upsample of the input is added as a global residual.
template <class S>
class SRModel {
 public:
  SRModel(const SRBaselineConfig& cfg, const DataDims& dims, std::uint64_t seed)
      : cfg_(cfg), dims_(dims), reg_(seed) {
    cfg_.validate(dims);
    const int cse = cfg_.obs_concat ? cfg_.sat_enc_channels : 0;
    const int cin = dims.V + cse;
    if (cfg_.obs_concat) {
      sat_conv_ = nn::Conv2d<S>(reg_, "sat_conv", dims.frames * dims.channels,
                                cfg_.sat_enc_channels, 3, 1, 1);
      sat_pool_ = nn::AvgPool<S>(dims.SH, dims.SW, dims.SH / dims.LH);
    }
    lr_up_ = nn::Resize<S>(dims.LH, dims.LW, dims.TH, dims.TW);
    if (cfg_.arch == "unet") {
      const int b = cfg_.unet_base;
      enc0_ = DoubleConv<S>(reg_, "enc0", cin, b);
      enc1_ = DoubleConv<S>(reg_, "enc1", b, 2 * b);
      bott_ = DoubleConv<S>(reg_, "bott", 2 * b, 4 * b);
      up1_ = nn::Conv2d<S>(reg_, "up1", 4 * b, 2 * b, 1, 1, 0);
      dec1_ = DoubleConv<S>(reg_, "dec1", 4 * b, 2 * b);
      up0_ = nn::Conv2d<S>(reg_, "up0", 2 * b, b, 1, 1, 0);
      dec0_ = DoubleConv<S>(reg_, "dec0", 2 * b, b);
      head1_ = nn::Conv2d<S>(reg_, "head1", b, b, 3, 1, 1);
      head2_ = nn::Conv2d<S>(reg_, "head2", b, dims.V, 3, 1, 1);
      pool2a_ = nn::AvgPool<S>(dims.LH, dims.LW, 2);
      pool2b_ = nn::AvgPool<S>(dims.LH / 2, dims.LW / 2, 2);
      up_rz1_ = nn::Resize<S>(dims.LH / 4, dims.LW / 4, dims.LH / 2, dims.LW / 2);
      up_rz0_ = nn::Resize<S>(dims.LH / 2, dims.LW / 2, dims.LH, dims.LW);
      up_hr_ = nn::Resize<S>(dims.LH, dims.LW, dims.TH, dims.TW);
    } else {
      const int w = cfg_.edsr_width;
      e_head_ = nn::Conv2d<S>(reg_, "head", cin, w, 3, 1, 1);
      for (int b = 0; b < cfg_.edsr_blocks; ++b) {
        e_conv1_.emplace_back(reg_, "blk" + std::to_string(b) + ".c1", w, w, 3, 1, 1);
        e_conv2_.emplace_back(reg_, "blk" + std::to_string(b) + ".c2", w, w, 3, 1, 1);
      }
      e_gelu_.resize(e_conv1_.size());
      e_body_end_ = nn::Conv2d<S>(reg_, "body_end", w, w, 3, 1, 1);
      e_tail_ = nn::Conv2d<S>(reg_, "tail", w, dims.V * cfg_.upscale * cfg_.upscale, 3, 1, 1);
      shuffle_ = PixelShuffle<S>(dims.V, cfg_.upscale, dims.LH, dims.LW);
    }
  }

  const SRBaselineConfig& config() const { return cfg_; }
  const DataDims& data_dims() const { return dims_; }
  nn::ParamRegistry<S>& params() { return reg_; }

  void begin_batch(int n) {
    if (cfg_.obs_concat) sat_conv_.begin(n);
    if (cfg_.arch == "unet") {
      enc0_.begin(n);
      enc1_.begin(n);
      bott_.begin(n);
      up1_.begin(n);
      dec1_.begin(n);
      up0_.begin(n);
      dec0_.begin(n);
      head1_.begin(n);
      head2_.begin(n);
      hgelu_.begin(n);
    } else {
      e_head_.begin(n);
      for (auto& c : e_conv1_) c.begin(n);
      for (auto& c : e_conv2_) c.begin(n);
      for (auto& g : e_gelu_) g.begin(n);
      e_body_end_.begin(n);
      e_tail_.begin(n);
    }
    cache_.assign(n, {});
  }

  // lr: (V, LH*LW); sat: (frames*channels, SH*SW) -> (V, TH*TW)
  Mat<S> forward(int slot, const Mat<S>& lr, const Mat<S>& sat) {
    if (lr.rows() != dims_.V) throw ShapeError("sr: variable count mismatch");
    auto& c = cache_[slot];
    Mat<S> x;
    if (cfg_.obs_concat) {
      Mat<S> enc = sat_conv_.forward(slot, sat, dims_.SH, dims_.SW);
      Mat<S> pooled = sat_pool_.forward(enc);
      x.resize(dims_.V + cfg_.sat_enc_channels, lr.cols());
      x.topRows(dims_.V) = lr;
      x.bottomRows(cfg_.sat_enc_channels) = pooled;
    } else {
      x = lr;
    }
    Mat<S> body;
    if (cfg_.arch == "unet")
      body = unet_forward(slot, x);
    else
      body = edsr_forward(slot, x);
    return body + lr_up_.forward(lr);
  }

  void backward(int slot, const Mat<S>& dpred) {
    Mat<S> dx = (cfg_.arch == "unet") ? unet_backward(slot, dpred) : edsr_backward(slot, dpred);
    if (cfg_.obs_concat) {
      Mat<S> dpooled = dx.bottomRows(cfg_.sat_enc_channels);
      sat_conv_.backward(slot, sat_pool_.backward(dpooled));
    }
    // dlr (top rows + residual path) is not propagated further: inputs are data
  }

 private:
  struct Cache {
    Mat<S> e0, e1, bott, d1, cat1, cat0, h1;       // unet
    Mat<S> head, body_in;                          // edsr
  };

  Mat<S> unet_forward(int slot, const Mat<S>& x) {
    auto& c = cache_[slot];
    const int H = dims_.LH, W = dims_.LW;
    c.e0 = enc0_.forward(slot, x, H, W);
    c.e1 = enc1_.forward(slot, pool2a_.forward(c.e0), H / 2, W / 2);
    c.bott = bott_.forward(slot, pool2b_.forward(c.e1), H / 4, W / 4);
    Mat<S> u1 = up1_.forward(slot, up_rz1_.forward(c.bott), H / 2, W / 2);
    c.cat1.resize(u1.rows() + c.e1.rows(), u1.cols());
    c.cat1.topRows(c.e1.rows()) = c.e1;
    c.cat1.bottomRows(u1.rows()) = u1;
    c.d1 = dec1_.forward(slot, c.cat1, H / 2, W / 2);
    Mat<S> u0 = up0_.forward(slot, up_rz0_.forward(c.d1), H, W);
    c.cat0.resize(u0.rows() + c.e0.rows(), u0.cols());
    c.cat0.topRows(c.e0.rows()) = c.e0;
    c.cat0.bottomRows(u0.rows()) = u0;
    Mat<S> d0 = dec0_.forward(slot, c.cat0, H, W);
    c.h1 = head1_.forward(slot, up_hr_.forward(d0), dims_.TH, dims_.TW);
    return head2_.forward(slot, hgelu_.forward(slot, c.h1), dims_.TH, dims_.TW);
  }

  Mat<S> unet_backward(int slot, const Mat<S>& dy) {
    auto& c = cache_[slot];
    Mat<S> d = head1_.backward(slot, hgelu_.backward(slot, head2_.backward(slot, dy)));
    d = up_hr_.backward(d);
    d = dec0_.backward(slot, d);
    Mat<S> de0 = d.topRows(c.e0.rows());
    Mat<S> du0 = d.bottomRows(d.rows() - c.e0.rows());
    Mat<S> dd1 = up_rz0_.backward(up0_.backward(slot, du0));
    dd1 = dec1_.backward(slot, dd1);
    Mat<S> de1 = dd1.topRows(c.e1.rows());
    Mat<S> du1 = dd1.bottomRows(dd1.rows() - c.e1.rows());
    Mat<S> dbott = up_rz1_.backward(up1_.backward(slot, du1));
    de1 += pool2b_.backward(bott_.backward(slot, dbott));
    de0 += pool2a_.backward(enc1_.backward(slot, de1));
    return enc0_.backward(slot, de0);
  }

  Mat<S> edsr_forward(int slot, const Mat<S>& x) {
    auto& c = cache_[slot];
    const int H = dims_.LH, W = dims_.LW;
    c.head = e_head_.forward(slot, x, H, W);
    Mat<S> f = c.head;
    for (size_t b = 0; b < e_conv1_.size(); ++b) {
      Mat<S> h = e_conv2_[b].forward(
          slot, e_gelu_[b].forward(slot, e_conv1_[b].forward(slot, f, H, W)), H, W);
      f += h;  // residual block, norm-free
    }
    f = e_body_end_.forward(slot, f, H, W);
    f += c.head;  // global skip
    return shuffle_.forward(e_tail_.forward(slot, f, H, W));
  }

  Mat<S> edsr_backward(int slot, const Mat<S>& dy) {
    Mat<S> d = e_tail_.backward(slot, shuffle_.backward(dy));
    Mat<S> dhead = d;  // global skip
    d = e_body_end_.backward(slot, d);
    for (int b = static_cast<int>(e_conv1_.size()) - 1; b >= 0; --b) {
      Mat<S> dh = e_conv1_[b].backward(
          slot, e_gelu_[b].backward(slot, e_conv2_[b].backward(slot, d)));
      d += dh;
    }
    d += dhead;
    return e_head_.backward(slot, d);
  }

  SRBaselineConfig cfg_;
  DataDims dims_;
  nn::ParamRegistry<S> reg_;

  nn::Conv2d<S> sat_conv_;
  nn::AvgPool<S> sat_pool_;
  nn::Resize<S> lr_up_;

  DoubleConv<S> enc0_, enc1_, bott_, dec1_, dec0_;
  nn::Conv2d<S> up1_, up0_, head1_, head2_;
  nn::GELU<S> hgelu_;
  nn::AvgPool<S> pool2a_, pool2b_;
  nn::Resize<S> up_rz1_, up_rz0_, up_hr_;

  nn::Conv2d<S> e_head_, e_body_end_, e_tail_;
  std::vector<nn::Conv2d<S>> e_conv1_, e_conv2_;
  std::vector<nn::GELU<S>> e_gelu_;
  PixelShuffle<S> shuffle_;

  std::vector<Cache> cache_;
};

// Training-step math for the SR baselines: full-grid supervision plus
// station supervision through differentiable bilinear sampling of the SR
// output. Mirrors the HyperDS step so both consume identical batches and
// loss configuration.
template <class S>
train::StepResult run_sr_sample_step(SRModel<S>& m, int slot, const train::SampleData<S>& sample,
                                     const model::StationComposer<S>& composer,
                                     const train::StepOptions& opt) {
  const auto& dims = m.data_dims();
  if (opt.hr_supervision && sample.hr == nullptr)
    throw ConfigError("sr step: HR supervision requested without labels");

  Mat<S> pred = m.forward(slot, sample.lr, sample.sat);
  const Eigen::Index NHR = pred.cols();

  train::StepResult res;
  Mat<S> dpred = Mat<S>::Zero(pred.rows(), pred.cols());
  if (opt.hr_supervision) {
    double acc = 0.0;
    const double inv = 1.0 / (static_cast<double>(dims.V) * NHR);
    for (Eigen::Index c = 0; c < NHR; ++c)
      for (int v = 0; v < dims.V; ++v) {
        const double d =
            static_cast<double>(pred(v, c)) - static_cast<double>((*sample.hr)(v, c));
        acc += d * d;
        dpred(v, c) = static_cast<S>(2.0 * d * inv);
      }
    res.grid_loss = acc * inv;
  } else {
    core::FieldGrid hr_proto(sample.lr_norm.domain, core::Resolution::High, dims.V);
    std::vector<std::array<double, 2>> centers(static_cast<size_t>(dims.TH) * dims.TW);
    for (int i = 0; i < dims.TH; ++i)
      for (int j = 0; j < dims.TW; ++j)
        centers[static_cast<size_t>(i) * dims.TW + j] = {hr_proto.center_lon(j),
                                                         hr_proto.center_lat(i)};
    const auto up = core::bilinear_interpolate(
        sample.lr_norm,
        std::span<const std::array<double, 2>>(centers.data(), centers.size()));
    double acc_hr = 0.0;
    const double inv_hr = 1.0 / (static_cast<double>(dims.V) * NHR);
    for (Eigen::Index c = 0; c < NHR; ++c)
      for (int v = 0; v < dims.V; ++v) {
        const double d = static_cast<double>(pred(v, c)) -
                         up[static_cast<size_t>(v) * NHR + c];
        acc_hr += d * d;
        dpred(v, c) += static_cast<S>(2.0 * d * inv_hr);
      }
    const int kf = dims.factor();
    const int LHW = dims.LH * dims.LW;
    Mat<S> down = Mat<S>::Zero(dims.V, LHW);
    for (int i = 0; i < dims.TH; ++i)
      for (int j = 0; j < dims.TW; ++j)
        down.col(static_cast<Eigen::Index>(i / kf) * dims.LW + j / kf) +=
            pred.col(static_cast<Eigen::Index>(i) * dims.TW + j) / static_cast<S>(kf * kf);
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
    for (int i = 0; i < dims.TH; ++i)
      for (int j = 0; j < dims.TW; ++j)
        dpred.col(static_cast<Eigen::Index>(i) * dims.TW + j) +=
            ddown.col(static_cast<Eigen::Index>(i / kf) * dims.LW + j / kf) /
            static_cast<S>(kf * kf);
    res.grid_loss = acc_hr * inv_hr + acc_lr * inv_lr;
  }

  const int M = static_cast<int>(sample.stn_coords.size());
  if (M > 0) {
    core::FieldGrid hr_proto(sample.lr_norm.domain, core::Resolution::High, dims.V);
    const auto stencils = core::bilinear_stencils(
        hr_proto,
        std::span<const std::array<double, 2>>(sample.stn_coords.data(), M));
    Mat<S> dec(dims.V, M);
    for (int s = 0; s < M; ++s) {
      dec.col(s).setZero();
      for (int k = 0; k < 4; ++k)
        dec.col(s) += static_cast<S>(stencils[s].w[k]) * pred.col(stencils[s].idx[k]);
    }
    Mat<S> stn_pred = composer.forward(dec);
    int n_valid = 0;
    for (size_t i = 0; i < sample.stn_valid.size(); ++i) n_valid += sample.stn_valid[i] ? 1 : 0;
    if (n_valid == 0) throw DegenerateLossError("sr step: no valid station entries");
    Mat<S> dstn = Mat<S>::Zero(dims.Vs, M);
    double acc = 0.0;
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
    if (opt.backward) {
      Mat<S> ddec = composer.backward(dec, dstn);
      const S b = static_cast<S>(opt.beta);
      for (int s = 0; s < M; ++s)
        for (int k = 0; k < 4; ++k)
          dpred.col(stencils[s].idx[k]) += b * static_cast<S>(stencils[s].w[k]) * ddec.col(s);
    }
  }
  res.total = res.grid_loss + opt.beta * res.station_loss;
  if (opt.backward) m.backward(slot, dpred * static_cast<S>(opt.loss_weight));
  return res;
}

}  // namespace hyperds::baselines
