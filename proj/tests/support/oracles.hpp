#pragma once

// Dense reference computations used to certify the library. Nothing here calls the
// library's solvers; only plain Eigen dense algebra.

#include <functional>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mcal/graph.hpp"
#include "mcal/models.hpp"
#include "mcal/spectral.hpp"

namespace oracle {

using mcal::Index;
using mcal::Label;

Eigen::MatrixXd dense_normalized_laplacian(const Eigen::MatrixXd& w);

// Uniform points in the unit square (d columns).
Eigen::MatrixXd random_points(Index n, Index d, std::mt19937_64& rng);

// Gaussian 10-NN-like graph on random points, its dense Laplacian and the exact M lowest
// eigenpairs from a dense solver.
struct GraphInstance {
  mcal::SparseGraph graph;
  Eigen::MatrixXd laplacian;
  std::shared_ptr<mcal::SpectralDecomposition> spectral;
};
GraphInstance random_graph_instance(Index n, Index m, double tau, std::mt19937_64& rng, int k = 8);

// |L| distinct nodes with uniform labels; every class appears when count >= n_classes.
mcal::LabeledSet random_labels(Index n, std::size_t count, int n_classes, bool binary, std::mt19937_64& rng);

// Loss value in the first argument, written independently of the library.
double loss_value(mcal::Family f, double x, Label y, double gamma);

// Minimizer of the full (untruncated) objective over u in R^N (binary) or U in R^{N x n_c}
// by dense Newton with backtracking, using the dense Laplacian L + tau^2 I as prior.
Eigen::MatrixXd dense_map(mcal::Family f, const Eigen::MatrixXd& laplacian, double tau,
                          const mcal::LabeledSet& labeled, double gamma);

// Central differences of a scalar function (gradient) or vector function (Jacobian).
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double h = 1e-5);
Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, double h = 1e-5);

// Stacked CE Hessian built from explicit Kronecker products over the given nodes.
Eigen::MatrixXd dense_ce_hessian(const Eigen::VectorXd& alpha, const mcal::SpectralDecomposition& sd,
                                 const std::vector<Index>& nodes, int n_classes, double gamma);

// ||alpha_tilde - alpha_hat|| for one Newton step on the CE look-ahead objective with
// (k, argmax pi_k) appended, solving the dense stacked system directly.
double dense_ce_lookahead_change(const mcal::ModelState& state, Index k);

double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace oracle
