#pragma once

#include <cmath>

#include "hyperds/model/config.hpp"
#include "hyperds/nn/core.hpp"

namespace hyperds::model {

// Decoder input layout: [sin/cos octave features of x-hat; same of y-hat;
// V auxiliary values], with coordinates normalized to [-1, 1].
inline int point_feature_dim(int fourier_freqs, int vars) {
  return 4 * fourier_freqs + vars;
}

template <class S>
void fill_point_features(S* dst, double x_hat, double y_hat, const double* aux_norm, int vars,
                         int fourier_freqs) {
  // octave ladder pi/2, pi, 2*pi, ... via double-angle recurrences: one
  // sincos per axis instead of one per feature
  int k = 0;
  for (double t : {x_hat, y_hat}) {
    double s = std::sin(M_PI_2 * t), c = std::cos(M_PI_2 * t);
    for (int f = 0; f < fourier_freqs; ++f) {
      dst[k++] = static_cast<S>(s);
      dst[k++] = static_cast<S>(c);
      const double s2 = 2.0 * s * c;
      c = c * c - s * s;
      s = s2;
    }
  }
  for (int v = 0; v < vars; ++v) dst[k++] = static_cast<S>(aux_norm[v]);
}

// Half-open block ownership, last block closed.
inline int block_axis_index(double t_hat, int blocks) {
  const int b = static_cast<int>(std::floor((t_hat + 1.0) * 0.5 * blocks));
  return std::min(std::max(b, 0), blocks - 1);
}

inline int block_of_point(double x_hat, double y_hat, int blocks_x, int blocks_y) {
  return block_axis_index(y_hat, blocks_y) * blocks_x + block_axis_index(x_hat, blocks_x);
}

}  // namespace hyperds::model
