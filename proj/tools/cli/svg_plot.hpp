#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nplab/metrics/metrics.hpp"
#include "nplab/taskgen/tasks.hpp"

namespace nplab::cli {

/// Predictive mean and a band of three mixture standard deviations on a grid.
struct BandPlot {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> half_width;
  std::vector<std::pair<double, double>> truth;    // target points, sorted by x
  std::vector<std::pair<double, double>> context;
  std::string title;
};

/// Throws ContractError for tasks that are not 1D in and out.
BandPlot make_band_plot(const metrics::Predictor& predict, const taskgen::Task& task, int points, double lo,
                        double hi, Rng& rng);

/// Self-contained SVG; fixed number formatting so equal inputs give equal bytes.
std::string render_svg(const BandPlot& plot);

}  // namespace nplab::cli
