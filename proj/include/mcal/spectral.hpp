#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>

#include <Eigen/Dense>

#include "mcal/graph.hpp"

namespace mcal {

// The M smallest eigenpairs of a normalized graph Laplacian together with the
// perturbation tau. Row k of `vectors` is the spectral embedding v_k of node k.
struct SpectralDecomposition {
  Eigen::VectorXd values;   // ascending, length M
  Eigen::MatrixXd vectors;  // N x M, orthonormal columns
  double tau = 0.001;

  Index num_nodes() const { return vectors.rows(); }
  Index rank() const { return vectors.cols(); }

  // diag(lambda_i + tau^2) as a vector.
  Eigen::VectorXd lambda_tau() const { return values.array() + tau * tau; }
  auto row(Index k) const { return vectors.row(k).transpose(); }
};

struct EigenSolverOptions {
  double tol = 1e-8;
  // Thick restarts allowed; 0 means 10 * M.
  int max_restarts = 0;
  std::uint64_t seed = 0;
  // Krylov subspace size; 0 picks max(2M + 1, M + 20) capped at N.
  Index subspace = 0;
  // Shift for the shift-invert operator (L + shift I)^{-1}.
  double shift = 1e-3;
};

// Lanczos with full reorthogonalization and thick restarts on the shift-invert operator,
// followed by a Rayleigh-Ritz pass on L and a deflation check for missed eigenvalues.
// Every returned pair satisfies |L v - lambda v|_2 <= tol; throws ConvergenceError otherwise.
SpectralDecomposition smallest_eigenpairs(const SparseMatrix& laplacian, Index m, double tau,
                                          const EigenSolverOptions& opts = {});

// Full spectrum by a dense symmetric eigensolver; reserved for certifying the sparse path.
struct DenseEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};
DenseEigen dense_eigen_oracle(const Eigen::MatrixXd& symmetric);

// Largest residual max_i |L v_i - lambda_i v_i|_2.
double max_residual(const SparseMatrix& laplacian, const SpectralDecomposition& sd);

// Cache layout: <dir>/eigenvalues.txt, <dir>/eigenvectors.txt, <dir>/spectral.meta.
void write_spectral_cache(const SpectralDecomposition& sd, std::uint64_t graph_hash,
                          const std::filesystem::path& dir);
// Returns the decomposition and fills `graph_hash_out` with the recorded graph hash.
SpectralDecomposition read_spectral_cache(const std::filesystem::path& dir,
                                          std::uint64_t* graph_hash_out = nullptr);

namespace detail {

using LinearOperator = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct LanczosResult {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // n x nev
  bool converged = false;
  int restarts = 0;
};

// Largest `nev` eigenpairs of a symmetric operator restricted to the orthogonal complement
// of `deflate`'s columns. `residual_tol(theta)` gives the accepted operator residual for a
// Ritz value theta.
LanczosResult lanczos_largest(const LinearOperator& op, Index n, Index nev, Index subspace,
                              const Eigen::MatrixXd& deflate,
                              const std::function<double(double)>& residual_tol, int max_restarts,
                              std::uint64_t seed);

}  // namespace detail

}  // namespace mcal
