#pragma once

#include <cmath>

#include "hyperds/nn/core.hpp"

namespace hyperds::nn {

// Everything below works on per-sample feature matrices with items (spatial
// positions, tokens, points) as columns. Layers keep one cache slot per batch
// element; forward(slot, ...) then backward(slot, ...) in any slot order.

template <class S>
class Linear {
 public:
  Linear() = default;
  Linear(ParamRegistry<S>& reg, const std::string& name, int in, int out, double gain = 1.0)
      : in_(in), out_(out) {
    W_ = &reg.add(name + ".w", out, in, gain / std::sqrt(static_cast<double>(in)));
    b_ = &reg.add(name + ".b", out, 1, 0.0);
  }

  void begin(int slots) { x_.assign(slots, {}); }

  Mat<S> forward(int slot, const Mat<S>& x) {
    if (x.rows() != in_) throw ShapeError("Linear: input rows mismatch");
    x_[slot] = x;
    Mat<S> y = W_->w * x;
    y.colwise() += Vec<S>(b_->w.col(0));
    return y;
  }

  Mat<S> backward(int slot, const Mat<S>& dy) {
    W_->g.noalias() += dy * x_[slot].transpose();
    b_->g.col(0) += dy.rowwise().sum();
    return W_->w.transpose() * dy;
  }

  int out_dim() const { return out_; }

 private:
  int in_ = 0, out_ = 0;
  Param<S>* W_ = nullptr;
  Param<S>* b_ = nullptr;
  std::vector<Mat<S>> x_;
};

template <class S>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParamRegistry<S>& reg, const std::string& name, int cin, int cout, int k, int stride,
         int pad)
      : cin_(cin), cout_(cout), k_(k), stride_(stride), pad_(pad) {
    const double fan_in = static_cast<double>(cin) * k * k;
    W_ = &reg.add(name + ".w", cout, cin * k * k, std::sqrt(2.0 / fan_in));
    b_ = &reg.add(name + ".b", cout, 1, 0.0);
  }

  void begin(int slots) { cache_.assign(slots, {}); }

  int out_h(int h) const { return (h + 2 * pad_ - k_) / stride_ + 1; }
  int out_w(int w) const { return (w + 2 * pad_ - k_) / stride_ + 1; }

  // x: (cin, H*W) -> (cout, Ho*Wo)
  Mat<S> forward(int slot, const Mat<S>& x, int H, int W) {
    if (x.rows() != cin_ || x.cols() != static_cast<Eigen::Index>(H) * W)
      throw ShapeError("Conv2d: input shape mismatch");
    auto& c = cache_[slot];
    c.H = H;
    c.W = W;
    c.Ho = out_h(H);
    c.Wo = out_w(W);
    // patches transposed: (Ho*Wo, cin*k*k); each patch-feature column is
    // contiguous across output positions
    c.colsT.setZero(static_cast<Eigen::Index>(c.Ho) * c.Wo,
                    static_cast<Eigen::Index>(cin_) * k_ * k_);
    im2col(x, c);
    Mat<S> y = W_->w * c.colsT.transpose();
    y.colwise() += Vec<S>(b_->w.col(0));
    return y;
  }

  // dy: (cout, Ho*Wo) -> dx: (cin, H*W)
  Mat<S> backward(int slot, const Mat<S>& dy) {
    auto& c = cache_[slot];
    W_->g.noalias() += dy * c.colsT;
    b_->g.col(0) += dy.rowwise().sum();
    Mat<S> dcolsT = dy.transpose() * W_->w;  // (Ho*Wo, cin*k*k)
    Mat<S> dx = Mat<S>::Zero(cin_, static_cast<Eigen::Index>(c.H) * c.W);
    col2im(dcolsT, c, dx);
    return dx;
  }

 private:
  struct Cache {
    Mat<S> colsT;
    int H = 0, W = 0, Ho = 0, Wo = 0;
  };

  // valid output-column range [lo, hi] for a kernel offset along one axis
  void axis_range(int kk, int n_in, int n_out, int& lo, int& hi) const {
    lo = 0;
    while (lo < n_out && lo * stride_ - pad_ + kk < 0) ++lo;
    hi = n_out - 1;
    while (hi >= 0 && hi * stride_ - pad_ + kk >= n_in) --hi;
  }

  void im2col(const Mat<S>& x, Cache& c) const {
    Eigen::Index feat = 0;
    for (int ci = 0; ci < cin_; ++ci)
      for (int ki = 0; ki < k_; ++ki)
        for (int kj = 0; kj < k_; ++kj, ++feat) {
          int lo, hi;
          axis_range(kj, c.W, c.Wo, lo, hi);
          if (hi < lo) continue;
          S* dst = c.colsT.col(feat).data();
          const S* src = x.row(ci).data();  // row of a col-major matrix: stride = cin
          for (int oi = 0; oi < c.Ho; ++oi) {
            const int ii = oi * stride_ - pad_ + ki;
            if (ii < 0 || ii >= c.H) continue;
            S* out = dst + static_cast<Eigen::Index>(oi) * c.Wo + lo;
            const int jj0 = lo * stride_ - pad_ + kj;
            if (stride_ == 1) {
              const S* in = src + (static_cast<Eigen::Index>(ii) * c.W + jj0) * cin_;
              for (int n = 0; n <= hi - lo; ++n) out[n] = in[static_cast<Eigen::Index>(n) * cin_];
            } else {
              for (int oj = lo; oj <= hi; ++oj)
                out[oj - lo] = x(ci, static_cast<Eigen::Index>(ii) * c.W + jj0 +
                                         static_cast<Eigen::Index>(oj - lo) * stride_);
            }
          }
        }
  }

  void col2im(const Mat<S>& dcolsT, const Cache& c, Mat<S>& dx) const {
    Eigen::Index feat = 0;
    for (int ci = 0; ci < cin_; ++ci)
      for (int ki = 0; ki < k_; ++ki)
        for (int kj = 0; kj < k_; ++kj, ++feat) {
          int lo, hi;
          axis_range(kj, c.W, c.Wo, lo, hi);
          if (hi < lo) continue;
          const S* src = dcolsT.col(feat).data();
          for (int oi = 0; oi < c.Ho; ++oi) {
            const int ii = oi * stride_ - pad_ + ki;
            if (ii < 0 || ii >= c.H) continue;
            const S* in = src + static_cast<Eigen::Index>(oi) * c.Wo + lo;
            const int jj0 = lo * stride_ - pad_ + kj;
            for (int n = 0; n <= hi - lo; ++n)
              dx(ci, static_cast<Eigen::Index>(ii) * c.W + jj0 +
                         static_cast<Eigen::Index>(n) * stride_) += in[n];
          }
        }
  }

  int cin_ = 0, cout_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
  Param<S>* W_ = nullptr;
  Param<S>* b_ = nullptr;
  std::vector<Cache> cache_;
};

// Per-sample normalization over (channels-in-group x positions); batch
// independent by construction.
template <class S>
class GroupNorm {
 public:
  GroupNorm() = default;
  GroupNorm(ParamRegistry<S>& reg, const std::string& name, int channels, int groups,
            double eps = 1e-5)
      : channels_(channels), groups_(groups), eps_(eps) {
    if (channels % groups != 0) throw ConfigError("GroupNorm: channels % groups != 0");
    gamma_ = &reg.add(name + ".gamma", channels, 1, 0.0);
    gamma_->w.setOnes();
    beta_ = &reg.add(name + ".beta", channels, 1, 0.0);
  }

  void begin(int slots) { cache_.assign(slots, {}); }

  Mat<S> forward(int slot, const Mat<S>& x) {
    if (x.rows() != channels_) throw ShapeError("GroupNorm: channel mismatch");
    auto& c = cache_[slot];
    const int gs = channels_ / groups_;
    c.xhat.resize(x.rows(), x.cols());
    c.inv_std.resize(groups_);
    for (int g = 0; g < groups_; ++g) {
      auto blk = x.middleRows(g * gs, gs);
      const S mean = blk.mean();
      const S var = (blk.array() - mean).square().mean();
      const S inv = S(1) / std::sqrt(var + static_cast<S>(eps_));
      c.inv_std[g] = inv;
      c.xhat.middleRows(g * gs, gs) = (blk.array() - mean) * inv;
    }
    Mat<S> y = c.xhat;
    y.array().colwise() *= gamma_->w.col(0).array();
    y.colwise() += Vec<S>(beta_->w.col(0));
    return y;
  }

  Mat<S> backward(int slot, const Mat<S>& dy) {
    auto& c = cache_[slot];
    const int gs = channels_ / groups_;
    gamma_->g.col(0) += dy.cwiseProduct(c.xhat).rowwise().sum();
    beta_->g.col(0) += dy.rowwise().sum();
    Mat<S> dxhat = dy;
    dxhat.array().colwise() *= gamma_->w.col(0).array();
    Mat<S> dx(dy.rows(), dy.cols());
    for (int g = 0; g < groups_; ++g) {
      auto dxh = dxhat.middleRows(g * gs, gs);
      auto xh = c.xhat.middleRows(g * gs, gs);
      const S m1 = dxh.mean();
      const S m2 = dxh.cwiseProduct(xh).mean();
      dx.middleRows(g * gs, gs) =
          (dxh.array() - m1 - xh.array() * m2) * c.inv_std[g];
    }
    return dx;
  }

 private:
  struct Cache {
    Mat<S> xhat;
    std::vector<S> inv_std;
  };
  int channels_ = 0, groups_ = 1;
  double eps_ = 1e-5;
  Param<S>* gamma_ = nullptr;
  Param<S>* beta_ = nullptr;
  std::vector<Cache> cache_;
};

// Per-token (per-column) normalization over channels.
template <class S>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamRegistry<S>& reg, const std::string& name, int dim, double eps = 1e-5)
      : dim_(dim), eps_(eps) {
    gamma_ = &reg.add(name + ".gamma", dim, 1, 0.0);
    gamma_->w.setOnes();
    beta_ = &reg.add(name + ".beta", dim, 1, 0.0);
  }

  void begin(int slots) { cache_.assign(slots, {}); }

  Mat<S> forward(int slot, const Mat<S>& x) {
    if (x.rows() != dim_) throw ShapeError("LayerNorm: dim mismatch");
    auto& c = cache_[slot];
    c.xhat.resize(x.rows(), x.cols());
    c.inv_std.resize(x.cols());
    for (Eigen::Index t = 0; t < x.cols(); ++t) {
      const S mean = x.col(t).mean();
      const S var = (x.col(t).array() - mean).square().mean();
      const S inv = S(1) / std::sqrt(var + static_cast<S>(eps_));
      c.inv_std[t] = inv;
      c.xhat.col(t) = (x.col(t).array() - mean) * inv;
    }
    Mat<S> y = c.xhat;
    y.array().colwise() *= gamma_->w.col(0).array();
    y.colwise() += Vec<S>(beta_->w.col(0));
    return y;
  }

  Mat<S> backward(int slot, const Mat<S>& dy) {
    auto& c = cache_[slot];
    gamma_->g.col(0) += dy.cwiseProduct(c.xhat).rowwise().sum();
    beta_->g.col(0) += dy.rowwise().sum();
    Mat<S> dxhat = dy;
    dxhat.array().colwise() *= gamma_->w.col(0).array();
    Mat<S> dx(dy.rows(), dy.cols());
    for (Eigen::Index t = 0; t < dy.cols(); ++t) {
      const S m1 = dxhat.col(t).mean();
      const S m2 = dxhat.col(t).cwiseProduct(c.xhat.col(t)).mean();
      dx.col(t) = (dxhat.col(t).array() - m1 - c.xhat.col(t).array() * m2) * c.inv_std[t];
    }
    return dx;
  }

 private:
  struct Cache {
    Mat<S> xhat;
    std::vector<S> inv_std;
  };
  int dim_ = 0;
  double eps_ = 1e-5;
  Param<S>* gamma_ = nullptr;
  Param<S>* beta_ = nullptr;
  std::vector<Cache> cache_;
};

template <class S>
class ReLU {
 public:
  void begin(int slots) { x_.assign(slots, {}); }
  Mat<S> forward(int slot, const Mat<S>& x) {
    x_[slot] = x;
    return x.cwiseMax(S(0));
  }
  Mat<S> backward(int slot, const Mat<S>& dy) {
    return (x_[slot].array() > S(0)).select(dy, Mat<S>::Zero(dy.rows(), dy.cols()));
  }

 private:
  std::vector<Mat<S>> x_;
};

// tanh-form GELU; smooth everywhere and SIMD-friendly through Eigen's
// vectorized tanh. gelu(x) - gelu(-x) == x holds exactly.
inline constexpr double kGeluC1 = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluC2 = 0.044715;

template <class S>
inline S gelu_value(S x) {
  const S u = S(kGeluC1) * (x + S(kGeluC2) * x * x * x);
  return S(0.5) * x * (S(1) + std::tanh(u));
}
template <class S>
inline S gelu_grad(S x) {
  const S x2 = x * x;
  const S t = std::tanh(S(kGeluC1) * (x + S(kGeluC2) * x * x2));
  return S(0.5) * (S(1) + t) +
         S(0.5) * x * (S(1) - t * t) * S(kGeluC1) * (S(1) + S(3 * kGeluC2) * x2);
}

template <class S>
inline Mat<S> gelu_mat(const Mat<S>& x) {
  auto xa = x.array();
  return (S(0.5) * xa * (S(1) + (S(kGeluC1) * (xa + S(kGeluC2) * xa.cube())).tanh())).matrix();
}
template <class S>
inline Mat<S> gelu_grad_mat(const Mat<S>& x) {
  auto xa = x.array();
  auto t = (S(kGeluC1) * (xa + S(kGeluC2) * xa.cube())).tanh();
  return (S(0.5) * (S(1) + t) +
          S(0.5) * xa * (S(1) - t.square()) * S(kGeluC1) * (S(1) + S(3 * kGeluC2) * xa.square()))
      .matrix();
}

template <class S>
class GELU {
 public:
  void begin(int slots) { x_.assign(slots, {}); }
  Mat<S> forward(int slot, const Mat<S>& x) {
    x_[slot] = x;
    return gelu_mat(x);
  }
  Mat<S> backward(int slot, const Mat<S>& dy) {
    return dy.cwiseProduct(gelu_grad_mat(x_[slot]));
  }

 private:
  std::vector<Mat<S>> x_;
};

// Fixed bilinear resize of feature maps, cell-center aligned, clamped at
// borders. Linear, so no per-sample cache.
template <class S>
class Resize {
 public:
  Resize() = default;
  Resize(int h_in, int w_in, int h_out, int w_out)
      : hi_(h_in), wi_(w_in), ho_(h_out), wo_(w_out) {
    idx_.resize(static_cast<size_t>(ho_) * wo_);
    wts_.resize(static_cast<size_t>(ho_) * wo_);
    for (int i = 0; i < ho_; ++i)
      for (int j = 0; j < wo_; ++j) {
        const double sy = (i + 0.5) * hi_ / ho_ - 0.5;
        const double sx = (j + 0.5) * wi_ / wo_ - 0.5;
        int i0 = std::clamp(static_cast<int>(std::floor(sy)), 0, std::max(0, hi_ - 2));
        int j0 = std::clamp(static_cast<int>(std::floor(sx)), 0, std::max(0, wi_ - 2));
        const double ty = std::clamp(sy - i0, 0.0, 1.0);
        const double tx = std::clamp(sx - j0, 0.0, 1.0);
        const int i1 = std::min(i0 + 1, hi_ - 1), j1 = std::min(j0 + 1, wi_ - 1);
        const size_t o = static_cast<size_t>(i) * wo_ + j;
        idx_[o] = {i0 * wi_ + j0, i0 * wi_ + j1, i1 * wi_ + j0, i1 * wi_ + j1};
        wts_[o] = {static_cast<S>((1 - tx) * (1 - ty)), static_cast<S>(tx * (1 - ty)),
                   static_cast<S>((1 - tx) * ty), static_cast<S>(tx * ty)};
      }
  }

  bool identity() const { return hi_ == ho_ && wi_ == wo_; }

  Mat<S> forward(const Mat<S>& x) const {
    if (identity()) return x;
    Mat<S> y(x.rows(), static_cast<Eigen::Index>(ho_) * wo_);
    for (size_t o = 0; o < idx_.size(); ++o)
      y.col(static_cast<Eigen::Index>(o)) =
          wts_[o][0] * x.col(idx_[o][0]) + wts_[o][1] * x.col(idx_[o][1]) +
          wts_[o][2] * x.col(idx_[o][2]) + wts_[o][3] * x.col(idx_[o][3]);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) const {
    if (identity()) return dy;
    Mat<S> dx = Mat<S>::Zero(dy.rows(), static_cast<Eigen::Index>(hi_) * wi_);
    for (size_t o = 0; o < idx_.size(); ++o)
      for (int k = 0; k < 4; ++k)
        dx.col(idx_[o][k]) += wts_[o][k] * dy.col(static_cast<Eigen::Index>(o));
    return dx;
  }

 private:
  int hi_ = 0, wi_ = 0, ho_ = 0, wo_ = 0;
  std::vector<std::array<int, 4>> idx_;
  std::vector<std::array<S, 4>> wts_;
};

// Non-overlapping average pooling by an integer factor. Linear.
template <class S>
class AvgPool {
 public:
  AvgPool() = default;
  AvgPool(int h_in, int w_in, int factor) : hi_(h_in), wi_(w_in), f_(factor) {
    if (hi_ % f_ != 0 || wi_ % f_ != 0) throw ShapeError("AvgPool: shape not divisible");
  }

  Mat<S> forward(const Mat<S>& x) const {
    const int ho = hi_ / f_, wo = wi_ / f_;
    Mat<S> y = Mat<S>::Zero(x.rows(), static_cast<Eigen::Index>(ho) * wo);
    const S inv = S(1) / static_cast<S>(f_ * f_);
    for (int i = 0; i < hi_; ++i)
      for (int j = 0; j < wi_; ++j)
        y.col(static_cast<Eigen::Index>(i / f_) * wo + j / f_) +=
            inv * x.col(static_cast<Eigen::Index>(i) * wi_ + j);
    return y;
  }

  Mat<S> backward(const Mat<S>& dy) const {
    const int wo = wi_ / f_;
    Mat<S> dx(dy.rows(), static_cast<Eigen::Index>(hi_) * wi_);
    const S inv = S(1) / static_cast<S>(f_ * f_);
    for (int i = 0; i < hi_; ++i)
      for (int j = 0; j < wi_; ++j)
        dx.col(static_cast<Eigen::Index>(i) * wi_ + j) =
            inv * dy.col(static_cast<Eigen::Index>(i / f_) * wo + j / f_);
    return dx;
  }

 private:
  int hi_ = 0, wi_ = 0, f_ = 1;
};

}  // namespace hyperds::nn
