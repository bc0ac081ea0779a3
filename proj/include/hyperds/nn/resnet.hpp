#pragma once

#include "hyperds/nn/layers.hpp"

namespace hyperds::nn {

// Basic residual block (two 3x3 convs with group norm, identity or projected
// skip), the ResNet-18 building block.
template <class S>
class BasicBlock {
 public:
  BasicBlock() = default;
  BasicBlock(ParamRegistry<S>& reg, const std::string& name, int cin, int cout, int stride,
             int gn_groups)
      : stride_(stride), projected_(cin != cout || stride != 1),
        conv1_(reg, name + ".conv1", cin, cout, 3, stride, 1),
        gn1_(reg, name + ".gn1", cout, gn_groups),
        conv2_(reg, name + ".conv2", cout, cout, 3, 1, 1),
        gn2_(reg, name + ".gn2", cout, gn_groups) {
    if (projected_) {
      proj_ = Conv2d<S>(reg, name + ".proj", cin, cout, 1, stride, 0);
      gnp_ = GroupNorm<S>(reg, name + ".gnp", cout, gn_groups);
    }
  }

  void begin(int slots) {
    conv1_.begin(slots);
    gn1_.begin(slots);
    act1_.begin(slots);
    conv2_.begin(slots);
    gn2_.begin(slots);
    act2_.begin(slots);
    if (projected_) {
      proj_.begin(slots);
      gnp_.begin(slots);
    }
  }

  Mat<S> forward(int slot, const Mat<S>& x, int H, int W, int& Ho, int& Wo) {
    Ho = conv1_.out_h(H);
    Wo = conv1_.out_w(W);
    Mat<S> h = act1_.forward(slot, gn1_.forward(slot, conv1_.forward(slot, x, H, W)));
    h = gn2_.forward(slot, conv2_.forward(slot, h, Ho, Wo));
    Mat<S> skip = projected_ ? gnp_.forward(slot, proj_.forward(slot, x, H, W)) : x;
    return act2_.forward(slot, h + skip);
  }

  Mat<S> backward(int slot, const Mat<S>& dy) {
    Mat<S> d = act2_.backward(slot, dy);
    Mat<S> dskip = projected_ ? proj_.backward(slot, gnp_.backward(slot, d)) : d;
    Mat<S> dmain = conv1_.backward(
        slot, gn1_.backward(slot, act1_.backward(
                                      slot, conv2_.backward(slot, gn2_.backward(slot, d)))));
    return dmain + dskip;
  }

 private:
  int stride_ = 1;
  bool projected_ = false;
  Conv2d<S> conv1_, conv2_, proj_;
  GroupNorm<S> gn1_, gn2_, gnp_;
  GELU<S> act1_, act2_;
};

// Small residual backbone: stem conv + up to two stages of two basic blocks,
// doubling width in stage 2. Output features are tapped after `stages`.
template <class S>
class ResNetEncoder {
 public:
  ResNetEncoder() = default;
  ResNetEncoder(ParamRegistry<S>& reg, const std::string& name, int in_ch, int base_width,
                int stem_stride, int stage1_stride, int stage2_stride, int stages = 2)
      : stages_(stages),
        stem_(reg, name + ".stem", in_ch, base_width, 3, stem_stride, 1),
        gn_stem_(reg, name + ".gn_stem", base_width, gn_groups(base_width)),
        b11_(reg, name + ".s1.b1", base_width, base_width, stage1_stride,
             gn_groups(base_width)),
        b12_(reg, name + ".s1.b2", base_width, base_width, 1, gn_groups(base_width)),
        out_channels_(stages >= 2 ? 2 * base_width : base_width) {
    if (stages < 1 || stages > 2) throw ConfigError("ResNetEncoder: stages must be 1 or 2");
    if (stages_ == 2) {
      b21_ = BasicBlock<S>(reg, name + ".s2.b1", base_width, 2 * base_width, stage2_stride,
                           gn_groups(2 * base_width));
      b22_ = BasicBlock<S>(reg, name + ".s2.b2", 2 * base_width, 2 * base_width, 1,
                           gn_groups(2 * base_width));
    }
  }

  static int gn_groups(int ch) { return ch % 8 == 0 ? 8 : 1; }

  void begin(int slots) {
    stem_.begin(slots);
    gn_stem_.begin(slots);
    act_.begin(slots);
    b11_.begin(slots);
    b12_.begin(slots);
    if (stages_ == 2) {
      b21_.begin(slots);
      b22_.begin(slots);
    }
  }

  Mat<S> forward(int slot, const Mat<S>& x, int H, int W, int& Ho, int& Wo) {
    int h1 = stem_.out_h(H), w1 = stem_.out_w(W);
    Mat<S> f = act_.forward(slot, gn_stem_.forward(slot, stem_.forward(slot, x, H, W)));
    int hh, ww;
    f = b11_.forward(slot, f, h1, w1, Ho, Wo);
    f = b12_.forward(slot, f, Ho, Wo, hh, ww);
    if (stages_ == 2) {
      f = b21_.forward(slot, f, Ho, Wo, Ho, Wo);
      f = b22_.forward(slot, f, Ho, Wo, hh, ww);
    }
    return f;
  }

  Mat<S> backward(int slot, const Mat<S>& dy) {
    Mat<S> d = dy;
    if (stages_ == 2) {
      d = b22_.backward(slot, d);
      d = b21_.backward(slot, d);
    }
    d = b12_.backward(slot, d);
    d = b11_.backward(slot, d);
    return stem_.backward(slot, gn_stem_.backward(slot, act_.backward(slot, d)));
  }

  int out_channels() const { return out_channels_; }

 private:
  int stages_ = 2;
  Conv2d<S> stem_;
  GroupNorm<S> gn_stem_;
  GELU<S> act_;
  BasicBlock<S> b11_, b12_, b21_, b22_;
  int out_channels_ = 0;
};

}  // namespace hyperds::nn
