#include "hyperds/synth/analytic_field.hpp"

#include <cmath>

namespace hyperds::synth {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kEps = 1e-12;
}  // namespace

double VariableField::eval(double u, double v, double t) const {
  double s = trend.eval(u, v);
  for (const Mode& m : modes) s += m.amp * std::sin(m.kx * u + m.ky * v + m.phase + m.omega * t);
  return rectified ? std::max(0.0, s) : s;
}

double VariableField::cell_average_exact(double u0, double u1, double v0, double v1,
                                         double t) const {
  const double du = u1 - u0, dv = v1 - v0;
  double s = trend.cell_average(u0, u1, v0, v1);
  for (const Mode& m : modes) {
    const double c = m.phase + m.omega * t;
    double avg;
    if (std::abs(m.kx) > kEps && std::abs(m.ky) > kEps) {
      // antiderivative F = -sin(kx u + ky v + c) / (kx ky); d2F/dudv = sin(...)
      auto F = [&](double u, double v) { return -std::sin(m.kx * u + m.ky * v + c); };
      avg = (F(u1, v1) - F(u0, v1) - F(u1, v0) + F(u0, v0)) / (m.kx * m.ky * du * dv);
    } else if (std::abs(m.kx) > kEps) {
      avg = (std::cos(m.kx * u0 + c) - std::cos(m.kx * u1 + c)) / (m.kx * du);
    } else if (std::abs(m.ky) > kEps) {
      avg = (std::cos(m.ky * v0 + c) - std::cos(m.ky * v1 + c)) / (m.ky * dv);
    } else {
      avg = std::sin(c);
    }
    s += m.amp * avg;
  }
  return s;
}

Eigen::MatrixXd VariableField::eval_grid(const Eigen::VectorXd& u_nodes,
                                         const Eigen::VectorXd& v_nodes, double t) const {
  const auto W = u_nodes.size(), H = v_nodes.size();
  Eigen::MatrixXd out(H, W);
  for (Eigen::Index i = 0; i < H; ++i)
    for (Eigen::Index j = 0; j < W; ++j) out(i, j) = trend.eval(u_nodes[j], v_nodes[i]);
  // sin(kx u + ky v + c) = cos(ky v + c) sin(kx u) + sin(ky v + c) cos(kx u):
  // each mode is a rank-2 outer-product update.
  Eigen::VectorXd sx(W), cx(W), sy(H), cy(H);
  for (const Mode& m : modes) {
    const double c = m.phase + m.omega * t;
    for (Eigen::Index j = 0; j < W; ++j) {
      sx[j] = std::sin(m.kx * u_nodes[j]);
      cx[j] = std::cos(m.kx * u_nodes[j]);
    }
    for (Eigen::Index i = 0; i < H; ++i) {
      sy[i] = std::sin(m.ky * v_nodes[i] + c);
      cy[i] = std::cos(m.ky * v_nodes[i] + c);
    }
    out.noalias() += m.amp * (cy * sx.transpose() + sy * cx.transpose());
  }
  if (rectified) out = out.cwiseMax(0.0);
  return out;
}

void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.resize(n);
  weights.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton iteration on P_n, starting from the Chebyshev estimate.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    // map from [-1,1] to [0,1]; weights normalized to sum 1
    nodes[i] = 0.5 * (1.0 - z);
    nodes[n - 1 - i] = 0.5 * (1.0 + z);
    const double w = 1.0 / ((1.0 - z * z) * pp * pp);
    weights[i] = w;
    weights[n - 1 - i] = w;
  }
}

Eigen::MatrixXd cell_averages(const VariableField& f, int height, int width, double t,
                              int quad_order) {
  Eigen::MatrixXd out(height, width);
  const double du = 1.0 / width, dv = 1.0 / height;
  if (!f.rectified) {
    for (int i = 0; i < height; ++i)
      for (int j = 0; j < width; ++j)
        out(i, j) = f.cell_average_exact(j * du, (j + 1) * du, i * dv, (i + 1) * dv, t);
    return out;
  }
  // Rectified field: tensor-product Gauss quadrature, processed one cell row
  // at a time so the working set stays cache resident.
  std::vector<double> gn, gw;
  gauss_legendre_unit(quad_order, gn, gw);
  const int G = quad_order;
  Eigen::VectorXd u_nodes(static_cast<Eigen::Index>(width) * G);
  Eigen::VectorXd v_band(G);
  for (int j = 0; j < width; ++j)
    for (int g = 0; g < G; ++g) u_nodes[static_cast<Eigen::Index>(j) * G + g] = (j + gn[g]) * du;
  for (int i = 0; i < height; ++i) {
    for (int g = 0; g < G; ++g) v_band[g] = (i + gn[g]) * dv;
    const Eigen::MatrixXd vals = f.eval_grid(u_nodes, v_band, t);  // (G, width*G)
    for (int j = 0; j < width; ++j) {
      double s = 0.0;
      for (int a = 0; a < G; ++a) {
        double row = 0.0;
        for (int b = 0; b < G; ++b)
          row += gw[b] * vals(a, static_cast<Eigen::Index>(j) * G + b);
        s += gw[a] * row;
      }
      out(i, j) = s;
    }
  }
  return out;
}

}  // namespace hyperds::synth
