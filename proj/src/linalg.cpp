#include "mcal/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Cholesky>

namespace mcal {

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& h) {
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (h + h.transpose()));
  if (llt.info() != Eigen::Success) throw std::runtime_error("matrix is not positive definite");
  Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
  return 0.5 * (inv + inv.transpose());
}

Eigen::MatrixXd woodbury_inverse(const Eigen::MatrixXd& a_inv, const Eigen::MatrixXd& u,
                                 const Eigen::MatrixXd& c, const Eigen::MatrixXd& v) {
  const Eigen::MatrixXd a_inv_u = a_inv * u;
  const Eigen::MatrixXd v_a_inv = v * a_inv;
  Eigen::MatrixXd inner = c.inverse() + v * a_inv_u;
  return a_inv - a_inv_u * inner.partialPivLu().solve(v_a_inv);
}

Eigen::MatrixXd rank_one_downdate(const Eigen::MatrixXd& cov, const Eigen::VectorXd& x, double s) {
  const Eigen::VectorXd cx = cov * x;
  Eigen::MatrixXd out = cov - (cx * cx.transpose()) / (s + x.dot(cx));
  return 0.5 * (out + out.transpose());
}

Eigen::MatrixXd pivoted_semidefinite_factor(const Eigen::MatrixXd& b, double rel_tol) {
  const Index n = b.rows();
  if (b.cols() != n) throw std::invalid_argument("factor: matrix must be square");
  Eigen::MatrixXd a = 0.5 * (b + b.transpose());
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  const double scale = n > 0 ? std::max(a.diagonal().maxCoeff(), 0.0) : 0.0;
  const double cutoff = rel_tol * scale;

  // Outer-product form: a holds the Schur complement in its trailing block.
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n, n);
  Index rank = 0;
  for (Index k = 0; k < n; ++k) {
    Index piv = k;
    for (Index i = k + 1; i < n; ++i)
      if (a(i, i) > a(piv, piv)) piv = i;
    if (!(a(piv, piv) > cutoff) || a(piv, piv) <= 0.0) break;
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      a.col(k).swap(a.col(piv));
      t.col(k).swap(t.col(piv));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(piv)]);
    }
    const double d = std::sqrt(a(k, k));
    t(k, k) = d;
    for (Index j = k + 1; j < n; ++j) t(k, j) = a(k, j) / d;
    for (Index i = k + 1; i < n; ++i)
      for (Index j = k + 1; j < n; ++j) a(i, j) -= t(k, i) * t(k, j);
    ++rank;
  }
  // Undo the permutation on the columns: B = P^T R^T R P.
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(rank, n);
  for (Index c = 0; c < n; ++c) out.col(perm[static_cast<std::size_t>(c)]) = t.col(c).head(rank);
  return out;
}

}  // namespace mcal
