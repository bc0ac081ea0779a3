#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hyperds/core/domain.hpp"

namespace hyperds::synth {

// One plane-wave mode in unit coordinates (u, v) in [0,1]^2 over the domain:
//   amp * sin(kx*u + ky*v + phase + omega*t)
// Modes whose (kx, ky) are 2*pi times integers have an exact zero mean over
// the domain, which the bias fields rely on.
struct Mode {
  double amp = 0.0;
  double kx = 0.0, ky = 0.0;
  double phase = 0.0;
  double omega = 0.0;  // phase drift per time step
};

// Low-order polynomial trend in unit coordinates.
struct PolyTrend {
  double c0 = 0.0, cu = 0.0, cv = 0.0, cuv = 0.0, cuu = 0.0, cvv = 0.0;

  double eval(double u, double v) const {
    return c0 + cu * u + cv * v + cuv * u * v + cuu * u * u + cvv * v * v;
  }
  // Exact average over [u0,u1] x [v0,v1].
  double cell_average(double u0, double u1, double v0, double v1) const {
    const double mu = 0.5 * (u0 + u1), mv = 0.5 * (v0 + v1);
    const double mu2 = (u0 * u0 + u0 * u1 + u1 * u1) / 3.0;
    const double mv2 = (v0 * v0 + v0 * v1 + v1 * v1) / 3.0;
    return c0 + cu * mu + cv * mv + cuv * mu * mv + cuu * mu2 + cvv * mv2;
  }
};

// Closed-form scalar field: trend + sum of modes, optionally rectified
// (max(0, .)) for the sparse precipitation variable.
struct VariableField {
  PolyTrend trend;
  std::vector<Mode> modes;
  bool rectified = false;

  double eval(double u, double v, double t) const;

  // Exact average over a rectangle (closed form; only valid when !rectified).
  double cell_average_exact(double u0, double u1, double v0, double v1, double t) const;

  // Values on a tensor grid, rows = v nodes, cols = u nodes. Rectification is
  // applied when the flag is set.
  Eigen::MatrixXd eval_grid(const Eigen::VectorXd& u_nodes, const Eigen::VectorXd& v_nodes,
                            double t) const;
};

// Gauss-Legendre nodes/weights on [0, 1]; weights sum to 1.
void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights);

// Cell averages of a VariableField on a regular H x W unit-coordinate grid.
// Closed form for smooth fields; tensor-product Gauss quadrature with
// `quad_order` points per axis per cell for rectified fields.
Eigen::MatrixXd cell_averages(const VariableField& f, int height, int width, double t,
                              int quad_order = 32);

}  // namespace hyperds::synth
