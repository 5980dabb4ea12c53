#pragma once

// Whole training runs and ablation grids as used by the command-line tool.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dgpcg/config.hpp"

namespace dgpcg {

struct RunSummary {
  EpochStats last;
  double mean_sigma2_first5 = 0.0;
  double mean_sigma2_last5 = 0.0;
};

/// Trains one configuration into `dir`: run_config.json and metrics.csv always,
/// checkpoints, sample triptychs and banks only when `artifacts` is set.
/// Progress lines go to `log` when given.
RunSummary train_run(const RunConfig& config, const std::filesystem::path& dir, bool artifacts,
                     std::ostream* log = nullptr);

struct GridPoint {
  std::string axis;   // depth, neighbors or lambda
  std::string value;
  RunConfig config;
  RunSummary result;
};

/// One grid point per entry of the ablate_* lists, each a copy of `base` with
/// that single value changed.
std::vector<GridPoint> ablation_grid(const RunConfig& base);

/// Runs every point on `base.jobs` threads into output_dir/<axis>_<value>/ and
/// writes summary_<axis>.csv per axis.
void run_ablation(std::vector<GridPoint>& grid, const RunConfig& base, std::ostream* log = nullptr);

}  // namespace dgpcg
