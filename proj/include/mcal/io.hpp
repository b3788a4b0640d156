#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mcal/graph.hpp"
#include "mcal/loop.hpp"

namespace mcal {

// CSV with header f0,...,f{d-1}[,label]. Labels in {-1,+1} make a binary dataset,
// otherwise they must be 1..n_c.
Dataset load_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

// One axis-aligned Gaussian blob of the Binary-Clusters table.
struct Blob {
  double cx, cy;  // center
  double sx, sy;  // per-axis standard deviation
  int count;      // points at the reference size
  Label label;
};
const std::vector<Blob>& binary_clusters_table();

// Samples the blob table. `target_size` > 0 rescales every blob count proportionally
// (total within one point per blob of the target).
Dataset generate_binary_clusters(std::uint64_t seed, Index target_size = 0);

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
};

struct ExperimentConfig {
  // A CSV path or "synthetic:binary-clusters".
  std::string dataset = "synthetic:binary-clusters";
  std::uint64_t dataset_seed = 0;
  Index dataset_size = 0;  // synthetic only; 0 keeps the reference size
  GraphConfig graph{};
  Index spectral_m = 50;
  double eig_tol = 1e-8;
  // Unset gamma and tau follow the model family (see default_gamma / default_tau).
  std::optional<double> tau;
  std::optional<double> gamma;
  LoopConfig loop{};  // loop.gamma is ignored; use resolved_loop()
  std::string output_dir = "out";
  int trials = 1;
  std::uint64_t seed = 0;
  ServiceConfig service{};

  double resolved_tau() const;
  LoopConfig resolved_loop() const;
  void validate() const;
};

// Family-dependent defaults for gamma and tau.
double default_gamma(Family f);
double default_tau(Family f);

// Versioned JSON document. Absent fields keep their defaults; unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text);
std::string config_to_json(const ExperimentConfig& cfg);

Dataset load_experiment_dataset(const ExperimentConfig& cfg);

}  // namespace mcal
