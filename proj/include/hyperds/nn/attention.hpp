#pragma once

#include "hyperds/nn/layers.hpp"

namespace hyperds::nn {

// Scaled dot-product multi-head attention over column-token matrices (C, T).
template <class S>
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(ParamRegistry<S>& reg, const std::string& name, int dim, int heads)
      : dim_(dim), heads_(heads) {
    if (dim % heads != 0) throw ConfigError("MultiHeadAttention: dim % heads != 0");
    wq_ = Linear<S>(reg, name + ".q", dim, dim);
    wk_ = Linear<S>(reg, name + ".k", dim, dim);
    wv_ = Linear<S>(reg, name + ".v", dim, dim);
    wo_ = Linear<S>(reg, name + ".o", dim, dim);
  }

  void begin(int slots) {
    wq_.begin(slots);
    wk_.begin(slots);
    wv_.begin(slots);
    wo_.begin(slots);
    cache_.assign(slots, {});
  }

  Mat<S> forward(int slot, const Mat<S>& xq, const Mat<S>& xkv) {
    auto& c = cache_[slot];
    c.Q = wq_.forward(slot, xq);
    c.K = wk_.forward(slot, xkv);
    c.V = wv_.forward(slot, xkv);
    const int dh = dim_ / heads_;
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));
    c.P.resize(heads_);
    Mat<S> O(dim_, xq.cols());
    for (int h = 0; h < heads_; ++h) {
      auto Qh = c.Q.middleRows(h * dh, dh);
      auto Kh = c.K.middleRows(h * dh, dh);
      auto Vh = c.V.middleRows(h * dh, dh);
      Mat<S> scores = (Qh.transpose() * Kh) * scale;  // (Tq, Tk)
      // row-wise softmax
      for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const S m = scores.row(i).maxCoeff();
        scores.row(i) = (scores.row(i).array() - m).exp();
        scores.row(i) /= scores.row(i).sum();
      }
      c.P[h] = scores;
      O.middleRows(h * dh, dh).noalias() = Vh * scores.transpose();
    }
    return wo_.forward(slot, O);
  }

  // Returns (dxq, dxkv).
  std::pair<Mat<S>, Mat<S>> backward(int slot, const Mat<S>& dy) {
    auto& c = cache_[slot];
    const int dh = dim_ / heads_;
    const S scale = S(1) / std::sqrt(static_cast<S>(dh));
    Mat<S> dO = wo_.backward(slot, dy);
    Mat<S> dQ(dim_, c.Q.cols()), dK(dim_, c.K.cols()), dV(dim_, c.V.cols());
    for (int h = 0; h < heads_; ++h) {
      auto Qh = c.Q.middleRows(h * dh, dh);
      auto Kh = c.K.middleRows(h * dh, dh);
      auto Vh = c.V.middleRows(h * dh, dh);
      auto dOh = dO.middleRows(h * dh, dh);
      const Mat<S>& P = c.P[h];
      dV.middleRows(h * dh, dh).noalias() = dOh * P;
      Mat<S> dP = dOh.transpose() * Vh;  // (Tq, dh) x ... -> (Tq, Tk)
      // softmax backward per row
      Mat<S> dScores(P.rows(), P.cols());
      for (Eigen::Index i = 0; i < P.rows(); ++i) {
        const S dot = P.row(i).cwiseProduct(dP.row(i)).sum();
        dScores.row(i) = P.row(i).array() * (dP.row(i).array() - dot);
      }
      dScores *= scale;
      dQ.middleRows(h * dh, dh).noalias() = Kh * dScores.transpose();
      dK.middleRows(h * dh, dh).noalias() = Qh * dScores;
    }
    Mat<S> dxq = wq_.backward(slot, dQ);
    Mat<S> dxkv = wk_.backward(slot, dK);
    dxkv += wv_.backward(slot, dV);
    return {std::move(dxq), std::move(dxkv)};
  }

  // Attention probabilities from the most recent forward in this slot.
  const std::vector<Mat<S>>& last_probs(int slot) const { return cache_[slot].P; }

 private:
  struct Cache {
    Mat<S> Q, K, V;
    std::vector<Mat<S>> P;
  };
  int dim_ = 0, heads_ = 1;
  Linear<S> wq_, wk_, wv_, wo_;
  std::vector<Cache> cache_;
};

// Pre-norm transformer block; cross-attention when a separate key/value
// stream is supplied.
template <class S>
class AttentionBlock {
 public:
  AttentionBlock() = default;
  AttentionBlock(ParamRegistry<S>& reg, const std::string& name, int dim, int heads, int ffn_dim)
      : ln_q_(reg, name + ".ln_q", dim),
        ln_kv_(reg, name + ".ln_kv", dim),
        ln_ffn_(reg, name + ".ln_ffn", dim),
        attn_(reg, name + ".attn", dim, heads),
        ffn_in_(reg, name + ".ffn.in", dim, ffn_dim),
        ffn_out_(reg, name + ".ffn.out", ffn_dim, dim) {}

  void begin(int slots) {
    ln_q_.begin(slots);
    ln_kv_.begin(slots);
    ln_ffn_.begin(slots);
    attn_.begin(slots);
    ffn_in_.begin(slots);
    ffn_out_.begin(slots);
    gelu_.begin(slots);
    cross_.assign(slots, false);
  }

  // Self-attention.
  Mat<S> forward(int slot, const Mat<S>& x) { return forward(slot, x, x, false); }

  // Cross-attention: queries from q, keys/values from kv.
  Mat<S> forward_cross(int slot, const Mat<S>& q, const Mat<S>& kv) {
    return forward(slot, q, kv, true);
  }

  // Self path: returns dx. Cross path: use backward_cross.
  Mat<S> backward(int slot, const Mat<S>& dy) {
    auto [dxq, dxkv] = backward_both(slot, dy);
    return dxq + dxkv;
  }

  std::pair<Mat<S>, Mat<S>> backward_cross(int slot, const Mat<S>& dy) {
    return backward_both(slot, dy);
  }

  const std::vector<Mat<S>>& last_probs(int slot) const { return attn_.last_probs(slot); }

 private:
  Mat<S> forward(int slot, const Mat<S>& q, const Mat<S>& kv, bool cross) {
    cross_[slot] = cross;
    Mat<S> nq = ln_q_.forward(slot, q);
    Mat<S> nkv = cross ? ln_kv_.forward(slot, kv) : nq;
    Mat<S> x = q + attn_.forward(slot, nq, nkv);
    Mat<S> h = ffn_out_.forward(slot, gelu_.forward(slot, ffn_in_.forward(slot, ln_ffn_.forward(slot, x))));
    return x + h;
  }

  std::pair<Mat<S>, Mat<S>> backward_both(int slot, const Mat<S>& dy) {
    Mat<S> dx = dy + ln_ffn_.backward(
                         slot, ffn_in_.backward(
                                   slot, gelu_.backward(slot, ffn_out_.backward(slot, dy))));
    auto [dnq, dnkv] = attn_.backward(slot, dx);
    if (cross_[slot]) {
      Mat<S> dq = dx + ln_q_.backward(slot, dnq);
      Mat<S> dkv = ln_kv_.backward(slot, dnkv);
      return {std::move(dq), std::move(dkv)};
    }
    Mat<S> dq = dx + ln_q_.backward(slot, dnq + dnkv);
    return {std::move(dq), Mat<S>::Zero(dy.rows(), dy.cols())};
  }

  LayerNorm<S> ln_q_, ln_kv_, ln_ffn_;
  MultiHeadAttention<S> attn_;
  Linear<S> ffn_in_, ffn_out_;
  GELU<S> gelu_;
  std::vector<bool> cross_;
};

}  // namespace hyperds::nn
