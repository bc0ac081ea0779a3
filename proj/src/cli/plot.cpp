#include "hyperds/cli/plot.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace hyperds::cli {

namespace {

// viridis anchors, dark to light
constexpr double kAnchors[][3] = {
    {0.267004, 0.004874, 0.329415}, {0.282623, 0.140926, 0.457517},
    {0.253935, 0.265254, 0.529983}, {0.206756, 0.371758, 0.553117},
    {0.163625, 0.471133, 0.558148}, {0.127568, 0.566949, 0.550556},
    {0.134692, 0.658636, 0.517649}, {0.266941, 0.748751, 0.440573},
    {0.477504, 0.821444, 0.318195}, {0.741388, 0.873449, 0.149561},
    {0.993248, 0.906157, 0.143936}};
constexpr int kNAnchors = static_cast<int>(sizeof(kAnchors) / sizeof(kAnchors[0]));

struct Image {
  int w = 0, h = 0;
  std::vector<unsigned char> rgb;
  Image(int width, int height) : w(width), h(height), rgb(static_cast<size_t>(width) * height * 3, 0) {}
  void set(int x, int y, const std::array<unsigned char, 3>& c) {
    if (x < 0 || x >= w || y < 0 || y >= h) return;
    unsigned char* p = rgb.data() + 3 * (static_cast<size_t>(y) * w + x);
    p[0] = c[0];
    p[1] = c[1];
    p[2] = c[2];
  }
  void write_ppm(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot write image: " + path);
    std::fprintf(f, "P6\n%d %d\n255\n", w, h);
    std::fwrite(rgb.data(), 1, rgb.size(), f);
    std::fclose(f);
  }
};

}  // namespace

std::array<unsigned char, 3> colormap(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double x = t * (kNAnchors - 1);
  const int i = std::min(static_cast<int>(x), kNAnchors - 2);
  const double f = x - i;
  std::array<unsigned char, 3> out{};
  for (int c = 0; c < 3; ++c) {
    const double v = kAnchors[i][c] * (1.0 - f) + kAnchors[i + 1][c] * f;
    out[c] = static_cast<unsigned char>(std::lround(255.0 * v));
  }
  return out;
}

std::vector<std::string> plot_station_errors(const train::EvalReport& rep,
                                             const std::string& out_prefix,
                                             const PlotOptions& opt) {
  if (rep.per_station_mse.size() == 0)
    throw Error("plot: report has no per-station errors");
  if (rep.grid_pred_mean.values.empty())
    throw Error("plot: report has no grid prediction for the base layer");
  const auto& g = rep.grid_pred_mean;
  const auto& dom = g.domain;
  const int W = g.width * opt.scale, H = g.height * opt.scale;

  std::vector<std::string> written;
  std::ofstream markers(out_prefix + "_markers.csv");
  if (!markers) throw IoError("cannot write markers csv for " + out_prefix);
  markers << "variable,station_id,px,py,mse_norm\n";

  const int Vs = static_cast<int>(rep.rows.size());
  for (int sv = 0; sv < Vs; ++sv) {
    // base layer for this station variable from the grid prediction
    std::vector<double> base(static_cast<size_t>(g.height) * g.width);
    for (int i = 0; i < g.height; ++i)
      for (int j = 0; j < g.width; ++j) {
        double val;
        if (sv == core::kStnWs) {
          const double u = rep.grid_specs[core::kVarU10].mean +
                           rep.grid_specs[core::kVarU10].std * g.at(core::kVarU10, i, j);
          const double v = rep.grid_specs[core::kVarV10].mean +
                           rep.grid_specs[core::kVarV10].std * g.at(core::kVarV10, i, j);
          val = (std::hypot(u, v) - rep.station_specs[sv].mean) / rep.station_specs[sv].std;
        } else {
          const int gv = sv == core::kStnSp ? core::kVarSp
                         : sv == core::kStnT2m ? core::kVarT2m
                                               : core::kVarTp;
          const double phys =
              rep.grid_specs[gv].mean + rep.grid_specs[gv].std * g.at(gv, i, j);
          val = (phys - rep.station_specs[sv].mean) / rep.station_specs[sv].std;
        }
        base[static_cast<size_t>(i) * g.width + j] = val;
      }
    double lo = base[0], hi = base[0];
    for (double v : base) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double span = hi - lo > 1e-12 ? hi - lo : 1.0;

    Image img(W, H);
    for (int y = 0; y < H; ++y)
      for (int x = 0; x < W; ++x) {
        const int i = g.height - 1 - y / opt.scale;  // north at the top
        const int j = x / opt.scale;
        auto c = colormap((base[static_cast<size_t>(i) * g.width + j] - lo) / span);
        // dim the base so markers stand out
        img.set(x, y, {static_cast<unsigned char>(c[0] / 2),
                       static_cast<unsigned char>(c[1] / 2),
                       static_cast<unsigned char>(c[2] / 2)});
      }

    double max_mse = 0.0;
    for (int m = 0; m < rep.per_station_mse.cols(); ++m)
      max_mse = std::max(max_mse, rep.per_station_mse(sv, m));
    for (int m = 0; m < rep.per_station_mse.cols(); ++m) {
      const double lon = rep.coords[m][0], lat = rep.coords[m][1];
      const int px = static_cast<int>((lon - dom.lon_min) / (dom.lon_max - dom.lon_min) * W);
      const int py = static_cast<int>((1.0 - (lat - dom.lat_min) / (dom.lat_max - dom.lat_min)) * H);
      const double mse = rep.per_station_mse(sv, m);
      auto c = colormap(max_mse > 0 ? mse / max_mse : 0.0);
      for (int dy = -3; dy <= 3; ++dy)
        for (int dx = -3; dx <= 3; ++dx)
          img.set(px + dx, py + dy, {255, 255, 255});
      for (int dy = -2; dy <= 2; ++dy)
        for (int dx = -2; dx <= 2; ++dx) img.set(px + dx, py + dy, c);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.12g", mse);
      markers << rep.rows[sv].variable << "," << rep.station_ids[m] << "," << px << "," << py
              << "," << buf << "\n";
    }
    const std::string path = out_prefix + "_" + rep.rows[sv].variable + ".ppm";
    img.write_ppm(path);
    written.push_back(path);
  }
  return written;
}

}  // namespace hyperds::cli
