#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sketchxai/data/sketch.hpp"
#include "sketchxai/model/network.hpp"
#include "sketchxai/sli/sli.hpp"

namespace sketchxai::analysis {

struct TransferMap {
  std::vector<std::string> categories;  // K names, in label order
  Eigen::MatrixXd confidence;           // (target, source), K x K
  Eigen::MatrixXi samples;              // runs per cell
  int per_class = 0;
  sli::SliConfig config;                // task/target are set per run
};

// Seed of the run that moves sample `sample` of class `source` toward
// `target`; recorded so any cell can be replayed.
std::uint64_t transfer_run_seed(std::uint64_t base, int source, int target, int sample, int num_classes);

// Runs SLI from the first `per_class` sketches of each of the first `classes`
// labels toward every one of those labels. Off-diagonal cells are transfers,
// the diagonal is recovery. Throws kInsufficientSamples if a class has fewer
// than `per_class` sketches.
TransferMap transfer_map(const model::Network<double>& net, const std::vector<data::Sketch>& sketches,
                         const std::vector<std::string>& categories, int classes, int per_class,
                         const sli::SliConfig& config);

// CSV with a header row and column of category names (rows are targets,
// columns are sources) plus `<path>.json` holding config, seeds and n.
void save_transfer_map(const TransferMap& map, const std::filesystem::path& csv_path);
TransferMap load_transfer_map(const std::filesystem::path& csv_path);

}  // namespace sketchxai::analysis
