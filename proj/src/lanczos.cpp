#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "mcal/spectral.hpp"

namespace mcal::detail {

namespace {

class Basis {
 public:
  Basis(Index n, Index ncv, const Eigen::MatrixXd& deflate, std::uint64_t seed)
      : q_(n, ncv), deflate_(deflate), rng_(seed) {}

  Eigen::MatrixXd& q() { return q_; }

  void project_out_deflation(Eigen::VectorXd& v) const {
    if (deflate_.cols() == 0) return;
    for (int pass = 0; pass < 2; ++pass) v.noalias() -= deflate_ * (deflate_.transpose() * v);
  }

  // Orthogonalizes w against the first `cols` basis vectors (two classical Gram-Schmidt
  // passes) and returns the projection coefficients.
  Eigen::VectorXd orthogonalize(Eigen::VectorXd& w, Index cols) const {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(cols);
    if (cols == 0) return h;
    for (int pass = 0; pass < 2; ++pass) {
      Eigen::VectorXd c = q_.leftCols(cols).transpose() * w;
      w.noalias() -= q_.leftCols(cols) * c;
      h += c;
    }
    return h;
  }

  // A fresh unit vector orthogonal to the deflation block and the first `cols` columns.
  Eigen::VectorXd random_unit(Index cols) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int attempt = 0; attempt < 16; ++attempt) {
      Eigen::VectorXd v(q_.rows());
      for (Index i = 0; i < v.size(); ++i) v(i) = normal(rng_);
      project_out_deflation(v);
      orthogonalize(v, cols);
      project_out_deflation(v);
      const double nv = v.norm();
      if (nv > 1e-8) return v / nv;
    }
    throw std::runtime_error("lanczos: cannot extend an orthonormal basis (space exhausted)");
  }

 private:
  Eigen::MatrixXd q_;
  const Eigen::MatrixXd& deflate_;
  std::mt19937_64 rng_;
};

}  // namespace

LanczosResult lanczos_largest(const LinearOperator& op, Index n, Index nev, Index subspace,
                              const Eigen::MatrixXd& deflate,
                              const std::function<double(double)>& residual_tol, int max_restarts,
                              std::uint64_t seed) {
  const Index avail = n - deflate.cols();
  if (nev < 1 || nev > avail) throw std::invalid_argument("lanczos: invalid number of eigenpairs");
  const Index ncv = std::min(std::max(subspace, nev + 1), avail);
  const bool exhaustive = ncv == avail;

  Basis basis(n, ncv, deflate, seed);
  Eigen::MatrixXd& q = basis.q();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(ncv, ncv);
  q.col(0) = basis.random_unit(0);

  Index kept = 0;
  Eigen::VectorXd w(n);
  Eigen::VectorXd residual(n);
  LanczosResult result;

  for (int restart = 0; restart <= max_restarts; ++restart) {
    double beta = 0.0;
    for (Index j = kept; j < ncv; ++j) {
      op(q.col(j), w);
      basis.project_out_deflation(w);
      const double w0 = w.norm();
      Eigen::VectorXd coeffs = basis.orthogonalize(w, j + 1);
      h.col(j).head(j + 1) = coeffs;
      h.row(j).head(j + 1) = coeffs.transpose();
      beta = w.norm();
      const bool breakdown = beta <= 1e-12 * std::max(w0, 1e-300);
      if (j + 1 < ncv) {
        q.col(j + 1) = breakdown ? basis.random_unit(j + 1) : Eigen::VectorXd(w / beta);
      } else {
        residual = w;
        if (breakdown) beta = 0.0;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (h + h.transpose()));
    const Eigen::VectorXd& theta = eig.eigenvalues();  // ascending
    const Eigen::MatrixXd& s = eig.eigenvectors();

    bool all_converged = true;
    for (Index i = ncv - nev; i < ncv; ++i) {
      const double est = std::abs(beta * s(ncv - 1, i));
      if (!(est <= residual_tol(theta(i)))) {
        all_converged = false;
        break;
      }
    }
    result.restarts = restart;
    if (all_converged || exhaustive || restart == max_restarts) {
      result.converged = all_converged || exhaustive;
      result.values.resize(nev);
      result.vectors.resize(n, nev);
      for (Index r = 0; r < nev; ++r) {
        const Index i = ncv - 1 - r;
        result.values(r) = theta(i);
        result.vectors.col(r) = q * s.col(i);
      }
      return result;
    }

    // Thick restart: keep the leading Ritz vectors and continue from the residual.
    const Index keep = std::min(ncv - 1, nev + (ncv - nev) / 2);
    Eigen::MatrixXd ritz = q * s.rightCols(keep);
    q.leftCols(keep) = ritz;
    h.setZero();
    h.diagonal().head(keep) = theta.tail(keep);
    Eigen::VectorXd next = residual;
    basis.project_out_deflation(next);
    basis.orthogonalize(next, keep);
    const double nn = next.norm();
    q.col(keep) = nn > 1e-12 * std::max(beta, 1e-300) && nn > 0.0 ? Eigen::VectorXd(next / nn)
                                                                    : basis.random_unit(keep);
    kept = keep;
  }
  return result;
}

}  // namespace mcal::detail
