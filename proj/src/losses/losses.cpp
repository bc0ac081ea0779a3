#include "hyperds/losses/losses.hpp"

#include <cmath>

namespace hyperds::losses {

namespace {

double mean_sq_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("loss: size mismatch");
  std::vector<double> sq(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sq[i] = d * d;
  }
  return core::pairwise_sum(sq) / static_cast<double>(sq.size());
}

}  // namespace

double grid_loss(const FieldGrid& pred, const FieldGrid& label) {
  if (pred.vars != label.vars || pred.height != label.height || pred.width != label.width)
    throw ShapeError("grid_loss: shape mismatch");
  return mean_sq_diff(pred.values, label.values);
}

double grid_loss_no_hr(const FieldGrid& pred, const FieldGrid& input_lr) {
  if (pred.vars != input_lr.vars) throw ShapeError("grid_loss_no_hr: variable count mismatch");
  if (pred.height % input_lr.height != 0 || pred.width % input_lr.width != 0 ||
      pred.height / input_lr.height != pred.width / input_lr.width)
    throw ShapeError("grid_loss_no_hr: shapes do not nest");
  const int k = pred.height / input_lr.height;

  // L_HR: bilinear upsample of the input vs the prediction
  std::vector<std::array<double, 2>> centers;
  centers.reserve(static_cast<size_t>(pred.height) * pred.width);
  for (int i = 0; i < pred.height; ++i)
    for (int j = 0; j < pred.width; ++j)
      centers.push_back({pred.center_lon(j), pred.center_lat(i)});
  const std::vector<double> up = core::bilinear_interpolate(
      input_lr, std::span<const std::array<double, 2>>(centers.data(), centers.size()));
  const double l_hr = mean_sq_diff(up, pred.values);

  // L_LR: input vs block mean of the prediction
  const FieldGrid down = core::area_downsample(pred, k);
  const double l_lr = mean_sq_diff(input_lr.values, down.values);
  return l_hr + l_lr;
}

double station_loss(std::span<const double> pred, const StationSet& label) {
  const size_t n = label.values.size();
  if (pred.size() != n) throw ShapeError("station_loss: size mismatch");
  std::vector<double> sq;
  sq.reserve(n);
  for (size_t i = 0; i < n; ++i)
    if (label.valid[i]) {
      const double d = pred[i] - label.values[i];
      sq.push_back(d * d);
    }
  if (sq.empty()) throw DegenerateLossError("station_loss: no valid entries");
  return core::pairwise_sum(sq) / static_cast<double>(sq.size());
}

double total_loss(double grid, double station, const LossConfig& cfg) {
  cfg.validate();
  return grid + cfg.beta * station;
}

std::pair<double, double> mse_mae(std::span<const double> pred, std::span<const double> truth,
                                  std::span<const std::uint8_t> mask) {
  if (pred.size() != truth.size()) throw ShapeError("mse_mae: size mismatch");
  if (!mask.empty() && mask.size() != pred.size())
    throw ShapeError("mse_mae: mask size mismatch");
  std::vector<double> sq, ab;
  sq.reserve(pred.size());
  ab.reserve(pred.size());
  for (size_t i = 0; i < pred.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double d = pred[i] - truth[i];
    sq.push_back(d * d);
    ab.push_back(std::abs(d));
  }
  if (sq.empty()) throw DegenerateLossError("mse_mae: empty mask");
  const double n = static_cast<double>(sq.size());
  return {core::pairwise_sum(sq) / n, core::pairwise_sum(ab) / n};
}

}  // namespace hyperds::losses
