#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mcal/common.hpp"

namespace mcal {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Feature matrix (one row per node) with optional ground-truth labels.
struct Dataset {
  Eigen::MatrixXd features;
  std::optional<std::vector<Label>> ground_truth;
  int n_classes = 2;
  // Binary datasets use the {+1, -1} alphabet, multiclass ones use 1..n_classes.
  bool binary = true;

  Index size() const { return features.rows(); }
  Index dim() const { return features.cols(); }

  // Throws std::invalid_argument if the invariants do not hold.
  void validate() const;
};

// Maps a label of the given alphabet to a 0-based class index.
// Binary: +1 -> 0, -1 -> 1. Multiclass: c -> c - 1.
int class_index(Label label, bool binary);
Label label_from_class(int class_idx, bool binary);
bool label_in_alphabet(Label label, int n_classes, bool binary);

enum class KernelType { gaussian, cosine };

struct Kernel {
  KernelType type = KernelType::gaussian;
  double sigma = 3.0;  // gaussian only
};

struct GraphConfig {
  int k_neighbors = 10;
  Kernel kernel{};
  bool zelnik_perona = true;
  // 0 means "use k_neighbors".
  int zp_neighbor_index = 0;

  int zp_index() const { return zp_neighbor_index > 0 ? zp_neighbor_index : k_neighbors; }
  void validate(Index n_nodes) const;
};

// Symmetric nonnegative weight matrix with zero diagonal, plus node degrees.
struct SparseGraph {
  SparseMatrix weights;
  Eigen::VectorXd degrees;

  Index size() const { return weights.rows(); }
};

// Kernel value between two feature vectors. Gaussian: exp(-|xi-xj|^2 / sigma).
// Cosine: <xi,xj>/(|xi||xj|), unclamped.
double compute_similarity(const Eigen::Ref<const Eigen::VectorXd>& xi,
                          const Eigen::Ref<const Eigen::VectorXd>& xj, const Kernel& kernel);

// k-nearest-neighbor graph symmetrized with max(W, W^T). Distance ties are broken by a
// seeded random priority so equal seeds give bit-identical graphs.
SparseGraph build_knn_graph(const Dataset& data, const GraphConfig& cfg, std::uint64_t rng_seed);

// Assembles a graph from an explicit symmetric weight matrix (diagonal is dropped).
SparseGraph graph_from_weights(const SparseMatrix& weights);

// L = I - D^{-1/2} W D^{-1/2}, symmetrized by averaging with its transpose.
SparseMatrix normalized_laplacian(const SparseGraph& g);

// Edge list I/O: "i j w" per undirected edge (i < j), 0-based, %.17g weights. The first
// line is a "# nodes N" comment so isolated trailing nodes survive a round trip.
void write_edge_list(const SparseGraph& g, const std::filesystem::path& path);
SparseGraph read_edge_list(const std::filesystem::path& path);

// FNV-1a hash over the node count and every stored edge; identifies a graph in caches.
std::uint64_t graph_hash(const SparseGraph& g);

}  // namespace mcal
