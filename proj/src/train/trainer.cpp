#include "hyperds/train/trainer.hpp"

#include <algorithm>
#include <cmath>

namespace hyperds::train {

double station_split_loss(TrainableModel<float>& model, const DatasetView& data,
                          Split time_split, Split station_split) {
  double acc = 0.0;
  long n = 0;
  for (int t : data.time_indices(time_split)) {
    SampleData<float> s = data.sample(t, station_split, false);
    if (s.stn_coords.empty()) continue;
    nn::Mat<float> pred = model.predict_stations(
        s, std::span<const std::array<double, 2>>(s.stn_coords.data(), s.stn_coords.size()));
    for (int v = 0; v < pred.rows(); ++v)
      for (int m = 0; m < pred.cols(); ++m) {
        if (!s.stn_valid[static_cast<size_t>(v) * pred.cols() + m]) continue;
        const double d = static_cast<double>(pred(v, m)) - static_cast<double>(s.stn_values(v, m));
        acc += d * d;
        ++n;
      }
  }
  if (n == 0) throw DegenerateLossError("station_split_loss: empty split");
  return acc / static_cast<double>(n);
}

TrainOutput train(TrainableModel<float>& model, const DatasetView& data, const TrainConfig& cfg) {
  cfg.validate();
  data.reset_log();

  const std::vector<int> train_times = data.time_indices(Split::Train);
  if (train_times.empty()) throw ConfigError("train: dataset has no training time steps");

  nn::Adam<float> adam(model.params());
  TrainOutput out;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = nn::cosine_restart_lr(cfg.lr, cfg.lr_min, epoch - 1, cfg.restart_period);

    std::vector<int> order = train_times;
    Rng shuffle_rng(mix_seed(cfg.seed, 0xE0, epoch));
    for (size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[shuffle_rng.below(i + 1)]);

    double grid_acc = 0.0, stn_acc = 0.0;
    long batches = 0;
    for (size_t pos = 0; pos < order.size(); pos += cfg.batch_size) {
      const int B = static_cast<int>(std::min<size_t>(cfg.batch_size, order.size() - pos));
      model.begin_batch(B);
      double g = 0.0, st = 0.0;
      for (int b = 0; b < B; ++b) {
        const int t = order[pos + b];
        SampleData<float> s = data.sample(t, Split::Train, cfg.hr_supervision);
        StepOptions opt;
        opt.P = model.samples_per_pixel();
        opt.pixel_fraction = cfg.hr_supervision ? cfg.pixel_fraction : 1.0;
        opt.sample_seed = mix_seed(cfg.seed, 0xE1, epoch, t);
        opt.hr_supervision = cfg.hr_supervision;
        opt.beta = cfg.beta;
        opt.backward = true;
        opt.loss_weight = 1.0 / B;
        StepResult r = model.sample_step(b, s, opt);
        if (!std::isfinite(r.total))
          throw Error("train: non-finite loss at epoch " + std::to_string(epoch) + ", time step " +
                      std::to_string(t));
        g += r.grid_loss / B;
        st += r.station_loss / B;
      }
      adam.step(lr, cfg.clip_norm);
      grid_acc += g;
      stn_acc += st;
      ++batches;
    }

    const double val = station_split_loss(model, data, Split::Val, Split::Val);
    io::CurveRow row;
    row.epoch = epoch;
    row.grid_loss = grid_acc / batches;
    row.station_loss = stn_acc / batches;
    row.val_station_loss = val;
    out.curves.push_back(row);
    if (!std::isfinite(val))
      throw Error("train: non-finite validation loss at epoch " + std::to_string(epoch));

    if (val < best_val) {
      best_val = val;
      best_epoch = epoch;
      out.best = model.to_checkpoint(epoch, val);
    }
  }

  if (best_epoch < 0) throw Error("train: no checkpoint was selected");
  if (!data.log().test_untouched())
    throw Error("train: test-split data was accessed during training");
  // leave the model holding the selected parameters
  model.load_checkpoint(out.best);
  return out;
}

}  // namespace hyperds::train
