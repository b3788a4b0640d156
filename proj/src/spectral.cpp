#include "mcal/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

namespace mcal {

namespace {

// Makes the first entry with |v_i| > 1e-12 positive.
void normalize_sign(Eigen::MatrixXd& v) {
  for (Index c = 0; c < v.cols(); ++c) {
    for (Index r = 0; r < v.rows(); ++r) {
      if (std::abs(v(r, c)) > 1e-12) {
        if (v(r, c) < 0.0) v.col(c) *= -1.0;
        break;
      }
    }
  }
}

// Reads one floating-point token; strtod accepts subnormals where operator>> may not.
bool read_double(std::istream& in, double& out) {
  std::string tok;
  if (!(in >> tok)) return false;
  char* end = nullptr;
  out = std::strtod(tok.c_str(), &end);
  return end != tok.c_str() && *end == '\0';
}

// Keeps the `m` largest entries of theta (with their vectors).
void keep_largest(Eigen::VectorXd& theta, Eigen::MatrixXd& vecs, Index m) {
  std::vector<Index> order(static_cast<std::size_t>(theta.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return theta(a) > theta(b); });
  Eigen::VectorXd t(m);
  Eigen::MatrixXd v(vecs.rows(), m);
  for (Index i = 0; i < m; ++i) {
    t(i) = theta(order[static_cast<std::size_t>(i)]);
    v.col(i) = vecs.col(order[static_cast<std::size_t>(i)]);
  }
  theta = std::move(t);
  vecs = std::move(v);
}

}  // namespace

SpectralDecomposition smallest_eigenpairs(const SparseMatrix& laplacian, Index m, double tau,
                                          const EigenSolverOptions& opts) {
  const Index n = laplacian.rows();
  if (laplacian.cols() != n) throw std::invalid_argument("laplacian must be square");
  if (m < 1) throw std::invalid_argument("number of eigenpairs must be positive");
  if (m > n) throw std::invalid_argument("number of eigenpairs exceeds matrix size");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(opts.shift > 0.0)) throw std::invalid_argument("shift must be positive");

  SparseMatrix shifted = laplacian;
  for (Index i = 0; i < n; ++i) shifted.coeffRef(i, i) += opts.shift;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw std::runtime_error("factorization of L + shift I failed");
  detail::LinearOperator op = [&ldlt](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    y = ldlt.solve(x);
  };

  // |L y - lambda y| <= (|L| + shift) |r| / theta with |L| <= 2 for a normalized Laplacian;
  // aim two orders of magnitude below the requested tolerance.
  const double shift = opts.shift;
  const double tol = opts.tol;
  auto residual_tol = [tol, shift](double theta) { return 1e-2 * tol * theta / (2.0 + shift); };
  const int max_restarts = opts.max_restarts > 0 ? opts.max_restarts : static_cast<int>(10 * m);
  const Index subspace =
      opts.subspace > 0 ? opts.subspace : std::min(n, std::max(2 * m + 1, m + 20));

  auto main = detail::lanczos_largest(op, n, m, subspace, Eigen::MatrixXd(n, 0), residual_tol,
                                      max_restarts, opts.seed);
  if (!main.converged)
    throw ConvergenceError("eigensolver did not converge within " + std::to_string(max_restarts) +
                               " restarts",
                           std::numeric_limits<double>::quiet_NaN());
  Eigen::VectorXd theta = main.values;
  Eigen::MatrixXd y = main.vectors;

  // A single-vector Krylov space can miss copies of repeated eigenvalues. Search the
  // orthogonal complement for anything below the current set and swap it in.
  for (Index round = 0; round <= m && y.cols() < n; ++round) {
    const Index nchk = std::min<Index>(n - m, 4);
    auto chk = detail::lanczos_largest(op, n, nchk, std::min(n - m, std::max<Index>(2 * nchk + 1, nchk + 20)),
                                       y, residual_tol, max_restarts, opts.seed + 1 + static_cast<std::uint64_t>(round));
    if (!chk.converged)
      throw ConvergenceError("eigensolver deflation check did not converge",
                             std::numeric_limits<double>::quiet_NaN());
    const double floor = theta.minCoeff();
    if (chk.values.maxCoeff() <= floor * (1.0 + 1e-10)) break;
    Eigen::VectorXd all_theta(theta.size() + chk.values.size());
    all_theta << theta, chk.values;
    Eigen::MatrixXd all_vecs(n, y.cols() + chk.vectors.cols());
    all_vecs << y, chk.vectors;
    keep_largest(all_theta, all_vecs, m);
    theta = std::move(all_theta);
    y = std::move(all_vecs);
  }

  // Rayleigh-Ritz on L itself.
  Eigen::MatrixXd ly = laplacian * y;
  Eigen::MatrixXd g = y.transpose() * ly;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(0.5 * (g + g.transpose()));
  SpectralDecomposition sd;
  sd.tau = tau;
  sd.values = rr.eigenvalues().cwiseMax(0.0);
  sd.vectors = y * rr.eigenvectors();
  normalize_sign(sd.vectors);

  const double res = max_residual(laplacian, sd);
  if (!(res <= tol))
    throw ConvergenceError("eigenpair residual " + std::to_string(res) + " exceeds tolerance", res);
  return sd;
}

DenseEigen dense_eigen_oracle(const Eigen::MatrixXd& symmetric) {
  if (symmetric.rows() != symmetric.cols()) throw std::invalid_argument("matrix must be square");
  if (symmetric.rows() > 2000) throw std::invalid_argument("dense eigen oracle limited to N <= 2000");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric);
  if (eig.info() != Eigen::Success) throw std::runtime_error("dense eigensolver failed");
  return {eig.eigenvalues(), eig.eigenvectors()};
}

double max_residual(const SparseMatrix& laplacian, const SpectralDecomposition& sd) {
  Eigen::MatrixXd r = laplacian * sd.vectors - sd.vectors * sd.values.asDiagonal();
  return r.colwise().norm().maxCoeff();
}

void write_spectral_cache(const SpectralDecomposition& sd, std::uint64_t graph_hash,
                          const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char buf[64];
  {
    std::ofstream out(dir / "eigenvalues.txt");
    if (!out) throw std::runtime_error("cannot write eigenvalues in " + dir.string());
    for (Index i = 0; i < sd.values.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g\n", sd.values(i));
      out << buf;
    }
  }
  {
    std::ofstream out(dir / "eigenvectors.txt");
    if (!out) throw std::runtime_error("cannot write eigenvectors in " + dir.string());
    for (Index r = 0; r < sd.vectors.rows(); ++r) {
      for (Index c = 0; c < sd.vectors.cols(); ++c) {
        std::snprintf(buf, sizeof(buf), c == 0 ? "%.17g" : " %.17g", sd.vectors(r, c));
        out << buf;
      }
      out << '\n';
    }
  }
  std::ofstream meta(dir / "spectral.meta");
  if (!meta) throw std::runtime_error("cannot write spectral.meta in " + dir.string());
  std::snprintf(buf, sizeof(buf), "%.17g", sd.tau);
  meta << "tau " << buf << '\n';
  meta << "M " << sd.rank() << '\n';
  meta << "N " << sd.num_nodes() << '\n';
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(graph_hash));
  meta << "graph_hash " << buf << '\n';
}

SpectralDecomposition read_spectral_cache(const std::filesystem::path& dir,
                                          std::uint64_t* graph_hash_out) {
  std::ifstream meta(dir / "spectral.meta");
  if (!meta) throw std::runtime_error("missing spectral.meta in " + dir.string());
  SpectralDecomposition sd;
  Index m = -1, n = -1;
  std::string key;
  while (meta >> key) {
    if (key == "tau") {
      if (!read_double(meta, sd.tau)) throw std::runtime_error("bad tau in spectral.meta");
    } else if (key == "M") {
      meta >> m;
    } else if (key == "N") {
      meta >> n;
    } else if (key == "graph_hash") {
      std::string hex;
      meta >> hex;
      if (graph_hash_out) *graph_hash_out = std::stoull(hex, nullptr, 16);
    } else {
      std::string skip;
      std::getline(meta, skip);
    }
  }
  if (m < 1 || n < 1) throw std::runtime_error("spectral.meta lacks M or N");

  std::ifstream vals(dir / "eigenvalues.txt");
  if (!vals) throw std::runtime_error("missing eigenvalues.txt in " + dir.string());
  sd.values.resize(m);
  for (Index i = 0; i < m; ++i) {
    if (!read_double(vals, sd.values(i))) throw std::runtime_error("eigenvalues.txt is truncated");
  }
  std::ifstream vecs(dir / "eigenvectors.txt");
  if (!vecs) throw std::runtime_error("missing eigenvectors.txt in " + dir.string());
  sd.vectors.resize(n, m);
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < m; ++c) {
      if (!read_double(vecs, sd.vectors(r, c))) throw std::runtime_error("eigenvectors.txt is truncated");
    }
  }
  return sd;
}

}  // namespace mcal
