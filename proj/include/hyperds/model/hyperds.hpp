#pragma once

#include "hyperds/model/config.hpp"
#include "hyperds/model/features.hpp"
#include "hyperds/nn/attention.hpp"
#include "hyperds/nn/resnet.hpp"

namespace hyperds::model {

using nn::Mat;
using nn::Vec;

// Weights of one coordinate-decoding MLP; per layer, generated by the
// hypernetwork or owned by the learnable store.
template <class S>
struct MlpWeights {
  std::vector<Mat<S>> W;
  std::vector<Vec<S>> b;
  std::vector<bool> generated;
};

// Points to decode for one sample. X columns are point feature vectors; for
// the multi_block decoder they must be sorted by block with block_ranges[k] =
// (offset, count) of block k. multi_var ignores the ranges.
template <class S>
struct DecodeBatch {
  Mat<S> X;
  std::vector<std::pair<int, int>> block_ranges;
};

// HyperDS: dual-branch encoders -> implicit retrieval (self + cross
// attention) -> weight generator -> coordinate MLP decoder.
template <class S>
class HyperDS {
 public:
  HyperDS(const HyperDSConfig& cfg, const DataDims& dims, std::uint64_t seed)
      : cfg_(cfg), dims_(dims), reg_(seed) {
    cfg_.validate(dims_);
    h_ = cfg_.resolved_h(dims_);
    w_ = cfg_.resolved_w(dims_);
    tokens_ = h_ * w_;
    const int cf = cfg_.feature_channels;

    field_enc_ = nn::ResNetEncoder<S>(reg_, "field_enc", dims_.V, cfg_.field_width, 1, 1, 1,
                                      cfg_.encoder_stages);
    field_proj_ = nn::Conv2d<S>(reg_, "field_proj", field_enc_.out_channels(), cf, 1, 1, 0);

    sat_enc_ = nn::ResNetEncoder<S>(reg_, "sat_enc", dims_.channels, cfg_.sat_width, 2, 2, 2,
                                    cfg_.encoder_stages);
    sat_proj_ = nn::Conv2d<S>(reg_, "sat_proj", 2 * sat_enc_.out_channels(), cf, 1, 1, 0);

    // spatial dims after each encoder
    const int sat_in_h = dims_.SH / cfg_.sat_input_pool;
    const int sat_in_w = dims_.SW / cfg_.sat_input_pool;
    if (cfg_.sat_input_pool > 1) sat_pool_ = nn::AvgPool<S>(dims_.SH, dims_.SW, cfg_.sat_input_pool);
    sat_feat_h_ = enc_out(sat_in_h);
    sat_feat_w_ = enc_out(sat_in_w);
    field_feat_h_ = dims_.LH;  // field encoder keeps full resolution
    field_feat_w_ = dims_.LW;
    field_resize_ = nn::Resize<S>(field_feat_h_, field_feat_w_, h_, w_);
    sat_resize_ = nn::Resize<S>(sat_feat_h_, sat_feat_w_, h_, w_);

    // each token stream gets its own learnable positional embedding
    pos_field_ = &reg_.add("pos_emb.field", cf, tokens_, 0.02);
    pos_sat_ = &reg_.add("pos_emb.sat", cf, tokens_, 0.02);

    const int ffn = cfg_.ffn_ratio * cf;
    for (int l = 0; l < cfg_.self_layers; ++l)
      self_blocks_.emplace_back(reg_, "self." + std::to_string(l), cf, cfg_.heads, ffn);
    for (int l = 0; l < cfg_.cross_layers; ++l)
      cross_blocks_.emplace_back(reg_, "cross." + std::to_string(l), cf, cfg_.heads, ffn);

    build_decoder();
  }

  const HyperDSConfig& config() const { return cfg_; }
  const DataDims& data_dims() const { return dims_; }
  nn::ParamRegistry<S>& params() { return reg_; }
  int tokens() const { return tokens_; }
  int feat_h() const { return h_; }
  int feat_w() const { return w_; }
  int point_dim() const { return point_feature_dim(cfg_.fourier_freqs, dims_.V); }
  int n_blocks() const {
    return cfg_.decoder_variant() == DecoderVariant::MultiBlock ? cfg_.blocks_x * cfg_.blocks_y
                                                                : 1;
  }

  void begin_batch(int B) {
    field_enc_.begin(B);
    field_proj_.begin(B);
    sat_enc_.begin(2 * B);
    sat_proj_.begin(B);
    for (auto& b : self_blocks_) b.begin(B);
    for (auto& b : cross_blocks_) b.begin(B);
    slots_.assign(B, {});
  }

  // lr_norm: (V, LH*LW) normalized input field.
  // sat: (frames*channels, SH*SW) normalized satellite frames.
  void forward_hyper(int slot, const Mat<S>& lr_norm, const Mat<S>& sat) {
    if (lr_norm.rows() != dims_.V ||
        lr_norm.cols() != static_cast<Eigen::Index>(dims_.LH) * dims_.LW)
      throw ShapeError("hyperds: low-res input shape mismatch");
    if (sat.rows() != dims_.frames * dims_.channels ||
        sat.cols() != static_cast<Eigen::Index>(dims_.SH) * dims_.SW)
      throw ShapeError("hyperds: satellite input shape mismatch");
    auto& sc = slots_[slot];

    // field branch
    int fh, fw;
    Mat<S> f = field_enc_.forward(slot, lr_norm, dims_.LH, dims_.LW, fh, fw);
    f = field_proj_.forward(slot, f, fh, fw);
    sc.field_tokens = field_resize_.forward(f);

    // satellite branch: shared-weight encoder on both frames
    std::array<Mat<S>, 2> ff;
    int sh = 0, sw = 0;
    for (int fr = 0; fr < 2; ++fr) {
      Mat<S> frame = sat.middleRows(fr * dims_.channels, dims_.channels);
      int H = dims_.SH, W = dims_.SW;
      if (cfg_.sat_input_pool > 1) {
        frame = sat_pool_.forward(frame);
        H /= cfg_.sat_input_pool;
        W /= cfg_.sat_input_pool;
      }
      ff[fr] = sat_enc_.forward(2 * slot + fr, frame, H, W, sh, sw);
    }
    sc.sat_frame_feats[0] = ff[0];
    sc.sat_frame_feats[1] = ff[1];
    Mat<S> cat(2 * sat_enc_.out_channels(), ff[0].cols());
    cat.topRows(sat_enc_.out_channels()) = ff[0];
    cat.bottomRows(sat_enc_.out_channels()) = ff[1];
    Mat<S> s = sat_proj_.forward(slot, cat, sh, sw);
    sc.sat_tokens = sat_resize_.forward(s);

    // implicit retrieval
    Mat<S> Ff = sc.field_tokens + pos_field_->w;
    Mat<S> Fs = sc.sat_tokens + pos_sat_->w;
    for (size_t l = 0; l < self_blocks_.size(); ++l) Fs = self_blocks_[l].forward(slot, Fs);
    const bool field_query = (cfg_.cross_query == "field");
    Mat<S> q = field_query ? Ff : Fs;
    sc.cross_kv = field_query ? Fs : Ff;
    for (size_t l = 0; l < cross_blocks_.size(); ++l)
      q = cross_blocks_[l].forward_cross(slot, q, sc.cross_kv);
    sc.fused = q;
    if (sc.fused.cols() != tokens_) throw ShapeError("hyperds: token count mismatch");
    sc.dfused = Mat<S>::Zero(sc.fused.rows(), sc.fused.cols());

    pool_and_generate(sc);
  }

  // Raw generator output for a given fused feature matrix (column per block;
  // multi_var: column per variable). Exposed for tests.
  Mat<S> gen_weights_raw(const Mat<S>& fused) const {
    Mat<S> pooled = pool_tokens(fused);
    return apply_generator(pooled);
  }

  // Assembled per-MLP weights for block/variable k from the generator output.
  MlpWeights<S> assemble_weights(const Mat<S>& gen, int k) const {
    MlpWeights<S> out;
    const auto& dims = (cfg_.decoder_variant() == DecoderVariant::MultiBlock)
                           ? block_layer_dims_
                           : var_layer_dims_;
    const int depth = static_cast<int>(dims.size()) - 1;
    int off = 0;
    for (int l = 0; l < depth; ++l) {
      const int fan_in = dims[l], fan_out = dims[l + 1];
      const bool from_gen =
          (cfg_.decoder_variant() == DecoderVariant::MultiBlock) || l < cfg_.generated_layers;
      if (from_gen) {
        const S scale = S(1) / std::sqrt(static_cast<S>(fan_in));
        Mat<S> W(fan_out, fan_in);
        for (int c = 0; c < fan_in; ++c)
          for (int r = 0; r < fan_out; ++r) W(r, c) = gen(off + c * fan_out + r, k) * scale;
        off += fan_out * fan_in;
        Vec<S> b = gen.col(k).segment(off, fan_out);
        off += fan_out;
        out.W.push_back(std::move(W));
        out.b.push_back(std::move(b));
        out.generated.push_back(true);
      } else {
        out.W.push_back(deep_w_[k][l - cfg_.generated_layers]->w);
        out.b.push_back(deep_b_[k][l - cfg_.generated_layers]->w.col(0));
        out.generated.push_back(false);
      }
    }
    return out;
  }

  // Stateless MLP evaluation under explicit weights.
  static Mat<S> mlp_eval(const MlpWeights<S>& wts, const Mat<S>& X) {
    const int depth = static_cast<int>(wts.W.size());
    Mat<S> a = X;
    for (int l = 0; l < depth; ++l) {
      Mat<S> z = wts.W[l] * a;
      z.colwise() += wts.b[l];
      a = (l + 1 < depth) ? nn::gelu_mat<S>(z) : std::move(z);
    }
    return a;
  }

  // Decode point batch -> (V, N) normalized predictions. During training one
  // decode per slot, paired with decode_backward; pure evaluation may decode
  // repeatedly.
  Mat<S> decode(int slot, const DecodeBatch<S>& batch) {
    auto& sc = slots_[slot];
    if (sc.fused.size() == 0) throw Error("hyperds: decode before forward_hyper");
    const Eigen::Index N = batch.X.cols();
    if (batch.X.rows() != point_dim()) throw ShapeError("hyperds: point feature dim mismatch");
    Mat<S> Y(dims_.V, N);
    if (cfg_.decoder_variant() == DecoderVariant::MultiBlock) {
      validate_ranges(batch, N);
      sc.preacts.assign(n_blocks(), {});
      for (int k = 0; k < n_blocks(); ++k) {
        const auto [off, cnt] = batch.block_ranges[k];
        if (cnt == 0) continue;
        MlpWeights<S> wts = assemble_weights(sc.gen, k);
        Y.middleCols(off, cnt) = mlp_forward(wts, batch.X.middleCols(off, cnt), sc.preacts[k]);
      }
    } else {
      sc.preacts.assign(dims_.V, {});
      for (int v = 0; v < dims_.V; ++v) {
        MlpWeights<S> wts = assemble_weights(sc.gen, v);
        Y.row(v) = mlp_forward(wts, batch.X, sc.preacts[v]);
      }
    }
    return Y;
  }

  // Accumulates gradients for generator / learnable decoder layers and the
  // fused-feature gradient for backward_hyper.
  void decode_backward(int slot, const DecodeBatch<S>& batch, const Mat<S>& dY) {
    auto& sc = slots_[slot];
    Mat<S> dgen = Mat<S>::Zero(sc.gen.rows(), sc.gen.cols());
    if (cfg_.decoder_variant() == DecoderVariant::MultiBlock) {
      for (int k = 0; k < n_blocks(); ++k) {
        const auto [off, cnt] = batch.block_ranges[k];
        if (cnt == 0) continue;
        MlpWeights<S> wts = assemble_weights(sc.gen, k);
        mlp_backward(wts, batch.X.middleCols(off, cnt), sc.preacts[k],
                     dY.middleCols(off, cnt), dgen, k);
      }
    } else {
      for (int v = 0; v < dims_.V; ++v) {
        MlpWeights<S> wts = assemble_weights(sc.gen, v);
        mlp_backward(wts, batch.X, sc.preacts[v], dY.row(v), dgen, v);
      }
    }
    // through the generator linear map
    wgen_w_->g.noalias() += dgen * sc.pooled.transpose();
    wgen_b_->g.col(0) += dgen.rowwise().sum();
    Mat<S> dpooled = wgen_w_->w.transpose() * dgen;  // (C_f, cols)
    pool_backward(dpooled, sc.dfused);
  }

  // Backprop the accumulated fused gradient through retrieval and encoders.
  void backward_hyper(int slot) {
    auto& sc = slots_[slot];
    Mat<S> dq = sc.dfused;
    Mat<S> dkv = Mat<S>::Zero(dq.rows(), dq.cols());
    for (int l = static_cast<int>(cross_blocks_.size()) - 1; l >= 0; --l) {
      auto [dq2, dkv2] = cross_blocks_[l].backward_cross(slot, dq);
      dq = std::move(dq2);
      dkv += dkv2;
    }
    const bool field_query = (cfg_.cross_query == "field");
    Mat<S> dFf = field_query ? dq : dkv;
    Mat<S> dFs = field_query ? dkv : dq;
    for (int l = static_cast<int>(self_blocks_.size()) - 1; l >= 0; --l)
      dFs = self_blocks_[l].backward(slot, dFs);
    pos_field_->g += dFf;
    pos_sat_->g += dFs;

    // field branch
    Mat<S> df = field_resize_.backward(dFf);
    df = field_proj_.backward(slot, df);
    field_enc_.backward(slot, df);

    // satellite branch
    Mat<S> ds = sat_resize_.backward(dFs);
    ds = sat_proj_.backward(slot, ds);
    const int ce = sat_enc_.out_channels();
    for (int fr = 0; fr < 2; ++fr)
      sat_enc_.backward(2 * slot + fr, fr == 0 ? ds.topRows(ce) : ds.bottomRows(ce));
  }

  // --- probes for tests ---
  const Mat<S>& fused(int slot) const { return slots_[slot].fused; }
  const Mat<S>& field_tokens(int slot) const { return slots_[slot].field_tokens; }
  const Mat<S>& sat_tokens(int slot) const { return slots_[slot].sat_tokens; }
  const Mat<S>& sat_frame_features(int slot, int frame) const {
    return slots_[slot].sat_frame_feats[frame];
  }
  const Mat<S>& generated(int slot) const { return slots_[slot].gen; }
  std::vector<const std::vector<Mat<S>>*> attention_probs(int slot) {
    std::vector<const std::vector<Mat<S>>*> out;
    for (auto& b : self_blocks_) out.push_back(&b.last_probs(slot));
    for (auto& b : cross_blocks_) out.push_back(&b.last_probs(slot));
    return out;
  }
  const std::vector<int>& decoder_layer_dims() const {
    return cfg_.decoder_variant() == DecoderVariant::MultiBlock ? block_layer_dims_
                                                                : var_layer_dims_;
  }

 private:
  struct SlotCache {
    Mat<S> field_tokens, sat_tokens, cross_kv, fused, dfused;
    std::array<Mat<S>, 2> sat_frame_feats;
    Mat<S> pooled, gen;
    std::vector<std::vector<Mat<S>>> preacts;  // per block/var, per hidden layer
  };

  int enc_out(int n) const {
    // stem stride 2, stage1 stride 2, stage2 stride 2 (when present)
    int out = (n + 1) / 2;
    out = (out + 1) / 2;
    if (cfg_.encoder_stages == 2) out = (out + 1) / 2;
    return out;
  }

  void build_decoder() {
    const int in_dim = point_dim();
    const auto variant = cfg_.decoder_variant();
    auto layer_dims = [&](int out_dim) {
      std::vector<int> d{in_dim};
      for (int l = 0; l < cfg_.mlp_depth - 1; ++l) d.push_back(cfg_.mlp_hidden);
      d.push_back(out_dim);
      return d;
    };
    block_layer_dims_ = layer_dims(dims_.V);
    var_layer_dims_ = layer_dims(1);
    const auto& dims = (variant == DecoderVariant::MultiBlock) ? block_layer_dims_
                                                               : var_layer_dims_;
    const int gen_layers =
        (variant == DecoderVariant::MultiBlock) ? cfg_.mlp_depth : cfg_.generated_layers;
    int n_gen = 0;
    for (int l = 0; l < gen_layers; ++l) n_gen += dims[l + 1] * dims[l] + dims[l + 1];
    n_gen_params_ = n_gen;

    const int cf = cfg_.feature_channels;
    wgen_w_ = &reg_.add("wgen.w", n_gen, cf, 0.2 / std::sqrt(static_cast<double>(cf)));
    wgen_b_ = &reg_.add("wgen.b", n_gen, 1, 0.0);
    // bias of the map doubles as the base MLP init: unit normals on weight
    // segments (scaled by 1/sqrt(fan_in) at assembly), zeros on bias segments
    {
      Rng rng(mix_seed(reg_.seed(), fnv1a("wgen.b.init")));
      int off = 0;
      for (int l = 0; l < gen_layers; ++l) {
        const int nw = dims[l + 1] * dims[l];
        for (int i = 0; i < nw; ++i)
          wgen_b_->w(off + i, 0) = static_cast<S>(rng.normal(0.0, 1.0));
        off += nw + dims[l + 1];
      }
    }

    if (variant == DecoderVariant::MultiVar) {
      deep_w_.resize(dims_.V);
      deep_b_.resize(dims_.V);
      for (int v = 0; v < dims_.V; ++v)
        for (int l = cfg_.generated_layers; l < cfg_.mlp_depth; ++l) {
          const std::string base =
              "dec.v" + std::to_string(v) + ".l" + std::to_string(l);
          deep_w_[v].push_back(&reg_.add(base + ".w", dims[l + 1], dims[l],
                                         1.0 / std::sqrt(static_cast<double>(dims[l]))));
          deep_b_[v].push_back(&reg_.add(base + ".b", dims[l + 1], 1, 0.0));
        }
    }
  }

  // mean over the block footprint (multi_block) or all tokens (multi_var);
  // one pooled column per decoder MLP
  Mat<S> pool_tokens(const Mat<S>& fused) const {
    if (cfg_.decoder_variant() == DecoderVariant::MultiVar) {
      Mat<S> pooled(fused.rows(), dims_.V);
      Vec<S> mean = fused.rowwise().mean();
      for (int v = 0; v < dims_.V; ++v) pooled.col(v) = mean;
      return pooled;
    }
    const int bx = cfg_.blocks_x, by = cfg_.blocks_y;
    const int th = h_ / by, tw = w_ / bx;
    Mat<S> pooled = Mat<S>::Zero(fused.rows(), bx * by);
    for (int bi = 0; bi < by; ++bi)
      for (int bj = 0; bj < bx; ++bj) {
        const int k = bi * bx + bj;
        for (int i = 0; i < th; ++i)
          for (int j = 0; j < tw; ++j)
            pooled.col(k) += fused.col((bi * th + i) * w_ + (bj * tw + j));
        pooled.col(k) /= static_cast<S>(th * tw);
      }
    return pooled;
  }

  void pool_backward(const Mat<S>& dpooled, Mat<S>& dfused) const {
    if (cfg_.decoder_variant() == DecoderVariant::MultiVar) {
      Vec<S> d = dpooled.rowwise().sum() / static_cast<S>(tokens_);
      dfused.colwise() += d;
      return;
    }
    const int bx = cfg_.blocks_x, by = cfg_.blocks_y;
    const int th = h_ / by, tw = w_ / bx;
    const S inv = S(1) / static_cast<S>(th * tw);
    for (int bi = 0; bi < by; ++bi)
      for (int bj = 0; bj < bx; ++bj) {
        const int k = bi * bx + bj;
        for (int i = 0; i < th; ++i)
          for (int j = 0; j < tw; ++j)
            dfused.col((bi * th + i) * w_ + (bj * tw + j)) += inv * dpooled.col(k);
      }
  }

  Mat<S> apply_generator(const Mat<S>& pooled) const {
    Mat<S> gen = wgen_w_->w * pooled;
    gen.colwise() += Vec<S>(wgen_b_->w.col(0));
    return gen;
  }

  void pool_and_generate(SlotCache& sc) {
    sc.pooled = pool_tokens(sc.fused);
    sc.gen = apply_generator(sc.pooled);
  }

  Mat<S> mlp_forward(const MlpWeights<S>& wts, const Mat<S>& X,
                     std::vector<Mat<S>>& preacts) const {
    const int depth = static_cast<int>(wts.W.size());
    preacts.clear();
    Mat<S> a = X;
    for (int l = 0; l < depth; ++l) {
      Mat<S> z = wts.W[l] * a;
      z.colwise() += wts.b[l];
      if (l + 1 < depth) {
        preacts.push_back(z);
        a = nn::gelu_mat(z);
      } else {
        a = std::move(z);
      }
    }
    return a;
  }

  void mlp_backward(const MlpWeights<S>& wts, const Mat<S>& X,
                    const std::vector<Mat<S>>& preacts, const Mat<S>& dY, Mat<S>& dgen, int k) {
    const int depth = static_cast<int>(wts.W.size());
    const auto& dims = (cfg_.decoder_variant() == DecoderVariant::MultiBlock)
                           ? block_layer_dims_
                           : var_layer_dims_;
    std::vector<int> offsets(depth + 1, 0);
    {
      const int gen_layers = (cfg_.decoder_variant() == DecoderVariant::MultiBlock)
                                 ? depth
                                 : cfg_.generated_layers;
      int off = 0;
      for (int l = 0; l < gen_layers; ++l) {
        offsets[l] = off;
        off += dims[l + 1] * dims[l] + dims[l + 1];
      }
    }
    Mat<S> dz = dY;
    for (int l = depth - 1; l >= 0; --l) {
      const Mat<S> a_in = l == 0 ? X : nn::gelu_mat(preacts[l - 1]);
      if (wts.generated[l]) {
        const int fan_in = dims[l], fan_out = dims[l + 1];
        const S scale = S(1) / std::sqrt(static_cast<S>(fan_in));
        Mat<S> dW = dz * a_in.transpose();
        const int off = offsets[l];
        for (int c = 0; c < fan_in; ++c)
          for (int r = 0; r < fan_out; ++r)
            dgen(off + c * fan_out + r, k) += dW(r, c) * scale;
        Vec<S> db = dz.rowwise().sum();
        dgen.col(k).segment(off + fan_out * fan_in, fan_out) += db;
      } else {
        const int dl = l - cfg_.generated_layers;
        deep_w_[k][dl]->g.noalias() += dz * a_in.transpose();
        deep_b_[k][dl]->g.col(0) += dz.rowwise().sum();
      }
      if (l > 0) {
        Mat<S> da = wts.W[l].transpose() * dz;
        dz = da.cwiseProduct(nn::gelu_grad_mat(preacts[l - 1]));
      }
    }
  }

  void validate_ranges(const DecodeBatch<S>& batch, Eigen::Index N) const {
    if (static_cast<int>(batch.block_ranges.size()) != n_blocks())
      throw ShapeError("hyperds: block range count mismatch");
    Eigen::Index covered = 0;
    for (const auto& [off, cnt] : batch.block_ranges) covered += cnt;
    if (covered != N) throw ShapeError("hyperds: block ranges do not cover the point batch");
  }

  HyperDSConfig cfg_;
  DataDims dims_;
  nn::ParamRegistry<S> reg_;
  int h_ = 0, w_ = 0, tokens_ = 0;
  int field_feat_h_ = 0, field_feat_w_ = 0, sat_feat_h_ = 0, sat_feat_w_ = 0;
  int n_gen_params_ = 0;

  nn::ResNetEncoder<S> field_enc_, sat_enc_;
  nn::Conv2d<S> field_proj_, sat_proj_;
  nn::AvgPool<S> sat_pool_;
  nn::Resize<S> field_resize_, sat_resize_;
  nn::Param<S>* pos_field_ = nullptr;
  nn::Param<S>* pos_sat_ = nullptr;
  std::vector<nn::AttentionBlock<S>> self_blocks_, cross_blocks_;

  nn::Param<S>* wgen_w_ = nullptr;
  nn::Param<S>* wgen_b_ = nullptr;
  std::vector<int> block_layer_dims_, var_layer_dims_;
  // multi_var learnable deep layers, indexed [variable][layer - generated]
  std::vector<std::vector<nn::Param<S>*>> deep_w_, deep_b_;

  std::vector<SlotCache> slots_;
};

}  // namespace hyperds::model
