#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "hyperds/core/error.hpp"

namespace hyperds::model {

enum class DecoderVariant { MultiBlock, MultiVar };

inline const char* variant_name(DecoderVariant v) {
  return v == DecoderVariant::MultiBlock ? "multi_block" : "multi_var";
}
inline DecoderVariant variant_from_name(const std::string& s) {
  if (s == "multi_block") return DecoderVariant::MultiBlock;
  if (s == "multi_var") return DecoderVariant::MultiVar;
  throw ConfigError("unknown decoder variant: " + s);
}

// Shapes of one dataset sample, shared by models and the trainer.
struct DataDims {
  int V = 5, Vs = 4;
  int LH = 16, LW = 16;
  int TH = 64, TW = 64;
  int SH = 128, SW = 128;
  int frames = 2, channels = 4;
  int factor() const { return TH / LH; }
};

struct HyperDSConfig {
  int feature_channels = 128;  // C_f
  // feature map size (h, w); 0 means "use the low-res grid size"
  int feat_h = 0, feat_w = 0;

  // encoders
  int field_width = 32;      // base width; stage 2 doubles it
  int sat_width = 32;
  int encoder_stages = 2;    // intermediate stage whose features are tapped
  int sat_input_pool = 1;    // average-pool satellite input by this factor

  // implicit retrieval
  int self_layers = 2;
  int cross_layers = 2;
  int heads = 4;
  int ffn_ratio = 2;
  // query stream of the cross-attention decoder ("field" or "satellite");
  // the retrieved output is aligned with the query stream
  std::string cross_query = "field";

  // decoder
  std::string variant = "multi_block";
  int blocks_x = 4, blocks_y = 4;  // multi_block tiling
  int mlp_depth = 5;               // linear layers
  int mlp_hidden = 64;
  int generated_layers = 2;        // multi_var: layers produced by the generator
  int samples_per_pixel = 10;      // P
  int fourier_freqs = 6;           // octave-spaced frequencies per axis

  DecoderVariant decoder_variant() const { return variant_from_name(variant); }

  int resolved_h(const DataDims& d) const { return feat_h > 0 ? feat_h : d.LH; }
  int resolved_w(const DataDims& d) const { return feat_w > 0 ? feat_w : d.LW; }

  void validate(const DataDims& d) const {
    if (feature_channels < heads || feature_channels % heads != 0)
      throw ConfigError("hyperds: feature_channels must be a positive multiple of heads");
    if (field_width < 1 || sat_width < 1) throw ConfigError("hyperds: encoder widths must be >= 1");
    if (encoder_stages < 1 || encoder_stages > 2)
      throw ConfigError("hyperds: encoder_stages must be 1 or 2");
    if (sat_input_pool < 1 || d.SH % sat_input_pool != 0 || d.SW % sat_input_pool != 0)
      throw ConfigError("hyperds: sat_input_pool must divide the satellite grid");
    if (self_layers < 0 || cross_layers < 1)
      throw ConfigError("hyperds: need at least one cross-attention layer");
    if (cross_query != "field" && cross_query != "satellite")
      throw ConfigError("hyperds: cross_query must be 'field' or 'satellite'");
    variant_from_name(variant);
    if (mlp_depth < 2) throw ConfigError("hyperds: mlp_depth must be >= 2");
    if (mlp_hidden < 1 || samples_per_pixel < 1 || fourier_freqs < 1)
      throw ConfigError("hyperds: positive mlp_hidden / P / fourier_freqs required");
    if (generated_layers < 1 || generated_layers > mlp_depth)
      throw ConfigError("hyperds: generated_layers must be in [1, mlp_depth]");
    const int h = resolved_h(d), w = resolved_w(d);
    if (blocks_x < 1 || blocks_y < 1 || d.TW % blocks_x != 0 || d.TH % blocks_y != 0)
      throw ConfigError("hyperds: blocks must tile the high-res grid exactly");
    if (h % blocks_y != 0 || w % blocks_x != 0)
      throw ConfigError("hyperds: blocks must tile the feature map exactly");
  }
};

void to_json(nlohmann::json& j, const HyperDSConfig& c);
void from_json(const nlohmann::json& j, HyperDSConfig& c);

}  // namespace hyperds::model
