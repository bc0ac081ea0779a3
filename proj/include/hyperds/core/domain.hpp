#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hyperds/core/error.hpp"

namespace hyperds::core {

enum class Resolution : std::uint8_t { Low, High };

// Geographic rectangle with nested low/high resolution grids.
// High-res cell size divides the low-res cell size exactly (factor >= 2).
struct DomainSpec {
  double lon_min = 0.0, lon_max = 0.0;
  double lat_min = 0.0, lat_max = 0.0;
  double cell_low = 0.0;   // degrees
  double cell_high = 0.0;  // degrees

  void validate() const {
    if (!(lon_min < lon_max) || !(lat_min < lat_max))
      throw ConfigError("DomainSpec: empty domain rectangle");
    if (!(cell_low > 0.0) || !(cell_high > 0.0))
      throw ConfigError("DomainSpec: cell sizes must be positive");
    if (!divides(lon_max - lon_min, cell_low) || !divides(lat_max - lat_min, cell_low) ||
        !divides(lon_max - lon_min, cell_high) || !divides(lat_max - lat_min, cell_high))
      throw ConfigError("DomainSpec: extent is not an integer multiple of cell sizes");
    if (!divides(cell_low, cell_high))
      throw ConfigError("DomainSpec: high-res cell does not divide low-res cell");
    if (factor() < 2) throw ConfigError("DomainSpec: resolution factor must be >= 2");
  }

  int factor() const { return static_cast<int>(std::llround(cell_low / cell_high)); }

  double cell(Resolution r) const { return r == Resolution::Low ? cell_low : cell_high; }
  // width = number of longitude cells (columns), height = latitude cells (rows)
  int width(Resolution r) const {
    return static_cast<int>(std::llround((lon_max - lon_min) / cell(r)));
  }
  int height(Resolution r) const {
    return static_cast<int>(std::llround((lat_max - lat_min) / cell(r)));
  }

  bool contains(double lon, double lat) const {
    return lon >= lon_min && lon <= lon_max && lat >= lat_min && lat <= lat_max;
  }
  bool contains_strict(double lon, double lat) const {
    return lon > lon_min && lon < lon_max && lat > lat_min && lat < lat_max;
  }

  // Coordinates normalized to [-1, 1] per axis.
  double norm_x(double lon) const { return 2.0 * (lon - lon_min) / (lon_max - lon_min) - 1.0; }
  double norm_y(double lat) const { return 2.0 * (lat - lat_min) / (lat_max - lat_min) - 1.0; }

 private:
  static bool divides(double whole, double part) {
    double q = whole / part;
    return std::abs(q - std::llround(q)) < 1e-9;
  }
};

struct VariableSpec {
  std::string short_name;
  std::string unit;
  double mean = 0.0;
  double std = 1.0;

  void validate() const {
    if (!(std > 0.0)) throw ConfigError("VariableSpec " + short_name + ": std must be > 0");
  }
};

// Canonical grid roster, in order. V = 5.
inline const std::vector<std::string>& grid_variable_names() {
  static const std::vector<std::string> names = {"u10", "v10", "t2m", "sp", "tp1h"};
  return names;
}
// Station-observed roster (wind observed only as speed). V_s = 4.
inline const std::vector<std::string>& station_variable_names() {
  static const std::vector<std::string> names = {"wind_speed", "sp", "t2m", "tp1h"};
  return names;
}
inline constexpr int kGridVars = 5;
inline constexpr int kStationVars = 4;
inline constexpr int kVarU10 = 0, kVarV10 = 1, kVarT2m = 2, kVarSp = 3, kVarTp = 4;
inline constexpr int kStnWs = 0, kStnSp = 1, kStnT2m = 2, kStnTp = 3;

// Gridded multi-variable field, values shaped (V, H, W) row-major.
// Values are stored in double; persistence converts to float32.
struct FieldGrid {
  DomainSpec domain;
  Resolution res = Resolution::Low;
  int vars = 0, height = 0, width = 0;
  std::vector<double> values;

  FieldGrid() = default;
  FieldGrid(const DomainSpec& d, Resolution r, int v)
      : domain(d), res(r), vars(v), height(d.height(r)), width(d.width(r)),
        values(static_cast<size_t>(v) * height * width, 0.0) {}

  double& at(int v, int i, int j) {
    return values[(static_cast<size_t>(v) * height + i) * width + j];
  }
  double at(int v, int i, int j) const {
    return values[(static_cast<size_t>(v) * height + i) * width + j];
  }

  // Cell (i, j) covers [lon_lo, lon_lo+cell] x [lat_lo, lat_lo+cell];
  // row i counts up from lat_min, column j from lon_min.
  double cell_size() const { return domain.cell(res); }
  double center_lon(int j) const { return domain.lon_min + (j + 0.5) * cell_size(); }
  double center_lat(int i) const { return domain.lat_min + (i + 0.5) * cell_size(); }

  bool finite() const {
    for (double x : values)
      if (!std::isfinite(x)) return false;
    return true;
  }
};

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

inline const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    default: return "test";
  }
}

// Scattered point observations at one time step.
// values/valid are shaped (V_s, M).
struct StationSet {
  std::vector<std::array<double, 2>> coords;  // (lon, lat)
  std::vector<Split> split;
  std::vector<double> values;
  std::vector<std::uint8_t> valid;
  int vars = 0;

  int count() const { return static_cast<int>(coords.size()); }
  double& value(int v, int m) { return values[static_cast<size_t>(v) * count() + m]; }
  double value(int v, int m) const { return values[static_cast<size_t>(v) * count() + m]; }
  std::uint8_t& is_valid(int v, int m) { return valid[static_cast<size_t>(v) * count() + m]; }
  std::uint8_t is_valid(int v, int m) const {
    return valid[static_cast<size_t>(v) * count() + m];
  }

  void check_inside(const DomainSpec& d) const {
    for (const auto& c : coords)
      if (!d.contains_strict(c[0], c[1]))
        throw DomainError("station outside domain rectangle");
  }
};

// Inner-point samples for one high-res pixel.
struct SubgridSampleSet {
  int pixel_i = 0, pixel_j = 0;
  std::vector<std::array<double, 2>> points;  // (lon, lat), inside the pixel rectangle
  std::vector<double> aux;                    // (V, P) interpolated input values
  std::vector<std::uint8_t> station_flag;

  int count() const { return static_cast<int>(points.size()); }
};

}  // namespace hyperds::core
