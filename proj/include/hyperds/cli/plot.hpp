#pragma once

#include <array>
#include <string>
#include <vector>

#include "hyperds/train/evaluate.hpp"

namespace hyperds::cli {

struct PlotOptions {
  int scale = 6;  // pixels per high-res cell
};

// Sequential dark-to-light colormap; t in [0, 1], t = 0 is darkest.
std::array<unsigned char, 3> colormap(double t);

// One PPM per station variable: the method's mean high-res grid prediction as
// the base layer, test stations as square markers colored by normalized MSE
// (darkest = zero error). Also emits <prefix>_markers.csv. Byte-deterministic.
// Returns the written image paths.
std::vector<std::string> plot_station_errors(const train::EvalReport& report,
                                             const std::string& out_prefix,
                                             const PlotOptions& opt = {});

}  // namespace hyperds::cli
