#pragma once

#include <Eigen/Dense>

#include "mcal/common.hpp"

namespace mcal {

// Inverse of a symmetric positive definite matrix via Cholesky, symmetrized.
// Throws std::runtime_error if the matrix is not numerically SPD.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& h);

// (A + U C V)^{-1} from A^{-1} by the Woodbury identity.
Eigen::MatrixXd woodbury_inverse(const Eigen::MatrixXd& a_inv, const Eigen::MatrixXd& u,
                                 const Eigen::MatrixXd& c, const Eigen::MatrixXd& v);

// (C^{-1} + x x^T / s)^{-1} = C - C x x^T C / (s + x^T C x): the covariance after
// observing one more quadratic-loss label with noise variance s.
Eigen::MatrixXd rank_one_downdate(const Eigen::MatrixXd& cov, const Eigen::VectorXd& x, double s);

// |s t^T|_F computed as |s|_2 |t|_2.
inline double rank_one_frobenius_norm(const Eigen::VectorXd& s, const Eigen::VectorXd& t) {
  return s.norm() * t.norm();
}

// Factor B = T^T T for a symmetric positive semidefinite B using Cholesky with complete
// pivoting. Pivots below `rel_tol * max(diag)` are truncated, so T has rank(B) rows. B is
// symmetrized first and tiny negative pivots are treated as zero.
Eigen::MatrixXd pivoted_semidefinite_factor(const Eigen::MatrixXd& b, double rel_tol = 1e-12);

}  // namespace mcal
