#pragma once

#include <memory>
#include <string>
#include <vector>

#include "mcal/io.hpp"
#include "mcal/spectral.hpp"

namespace mcal {

// Graph and spectral decomposition for an experiment configuration. The graph seed is the
// dataset seed so every trial shares one graph.
struct Prepared {
  std::shared_ptr<const Dataset> data;
  SparseGraph graph;
  std::shared_ptr<const SpectralDecomposition> spectral;
};
Prepared prepare_experiment(const ExperimentConfig& cfg);

// Runs cfg.trials seeded trials (seed + trial index) with the ground-truth oracle and writes
// <out>/trial_<k>/{accuracy,choices}.csv, <out>/summary.csv and <out>/config.json.
std::vector<RunRecord> run_trials(const ExperimentConfig& cfg, const Prepared& prep);

// Subcommands gen-data, build-graph, eig, run, serve. Returns the process exit code.
int cli_run(int argc, const char* const* argv);
int cli_run(const std::vector<std::string>& args);

}  // namespace mcal
