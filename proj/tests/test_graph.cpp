#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "mcal/graph.hpp"
#include "support/oracles.hpp"

using namespace mcal;

namespace {

Dataset line_points(std::initializer_list<double> xs) {
  Dataset d;
  d.features.resize(static_cast<Index>(xs.size()), 1);
  Index i = 0;
  for (double x : xs) d.features(i++, 0) = x;
  return d;
}

GraphConfig plain(int k, double sigma = 3.0) {
  GraphConfig c;
  c.k_neighbors = k;
  c.kernel.sigma = sigma;
  c.zelnik_perona = false;
  return c;
}

double max_abs(const SparseMatrix& m) {
  double best = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it) best = std::max(best, std::abs(it.value()));
  return best;
}

}  // namespace

TEST_CASE("gaussian and cosine similarity") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b = a;
  CHECK(compute_similarity(a, b, Kernel{KernelType::gaussian, 3.0}) == 1.0);
  CHECK(compute_similarity(a, b, Kernel{KernelType::cosine, 3.0}) == doctest::Approx(1.0).epsilon(1e-15));
  b << 1.0 + std::sqrt(3.0), 2.0;  // squared distance 3
  CHECK(compute_similarity(a, b, Kernel{KernelType::gaussian, 3.0}) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  Eigen::VectorXd c(2);
  c << -1.0, -2.0;
  CHECK(compute_similarity(a, c, Kernel{KernelType::cosine, 3.0}) == doctest::Approx(-1.0));
  Eigen::VectorXd z = Eigen::VectorXd::Zero(2), w(3);
  w << 1, 2, 3;
  CHECK_THROWS_AS(compute_similarity(a, z, Kernel{KernelType::cosine, 3.0}), std::invalid_argument);
  CHECK_THROWS_AS(compute_similarity(a, w, Kernel{KernelType::gaussian, 3.0}), std::invalid_argument);
}

TEST_CASE("three points on a line") {
  const SparseGraph g = build_knn_graph(line_points({0.0, 1.0, 2.0}), plain(2), 7);
  const Eigen::MatrixXd w(g.weights);
  CHECK(w(0, 1) == doctest::Approx(std::exp(-1.0 / 3.0)).epsilon(1e-15));
  CHECK(w(1, 2) == doctest::Approx(std::exp(-1.0 / 3.0)).epsilon(1e-15));
  CHECK(w(0, 2) == doctest::Approx(std::exp(-4.0 / 3.0)).epsilon(1e-15));
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(w.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.degrees - w.rowwise().sum()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("one-sided neighbors keep their weight after max symmetrization") {
  // Node 3 is far away: its nearest neighbor is 2, but 2's nearest is 1.
  const SparseGraph g = build_knn_graph(line_points({0.0, 1.0, 2.0, 10.0}), plain(1), 1);
  const Eigen::MatrixXd w(g.weights);
  CHECK(w(3, 2) > 0.0);
  CHECK(w(2, 3) == w(3, 2));
  CHECK(w(3, 0) == 0.0);
}

TEST_CASE("complete graph when k = N - 1") {
  std::mt19937_64 rng(3);
  Dataset d;
  d.features = oracle::random_points(12, 3, rng);
  const SparseGraph g = build_knn_graph(d, plain(11), 0);
  const Eigen::MatrixXd w(g.weights);
  for (Index i = 0; i < 12; ++i)
    for (Index j = 0; j < 12; ++j) {
      if (i == j) CHECK(w(i, j) == 0.0);
      else CHECK(w(i, j) > 0.0);
    }
}

TEST_CASE("equal seeds give bit-identical graphs, ties included") {
  // A lattice has many equal distances; the seeded priority decides the k-th neighbor.
  Dataset d;
  d.features.resize(25, 2);
  for (Index i = 0; i < 25; ++i) d.features.row(i) << static_cast<double>(i % 5), static_cast<double>(i / 5);
  GraphConfig cfg;
  cfg.k_neighbors = 3;
  const SparseGraph a = build_knn_graph(d, cfg, 42), b = build_knn_graph(d, cfg, 42);
  CHECK(Eigen::MatrixXd(a.weights) == Eigen::MatrixXd(b.weights));
  CHECK(graph_hash(a) == graph_hash(b));
}

TEST_CASE("Zelnik-Perona weights use the local scales and stay symmetric") {
  std::mt19937_64 rng(11);
  Dataset d;
  d.features = oracle::random_points(40, 2, rng);
  GraphConfig cfg;
  cfg.k_neighbors = 5;
  const SparseGraph g = build_knn_graph(d, cfg, 5);
  const Eigen::MatrixXd w(g.weights);
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);

  // Brute-force local scales: distance to the 5th nearest neighbor.
  Eigen::VectorXd s(40);
  for (Index i = 0; i < 40; ++i) {
    std::vector<double> dist;
    for (Index j = 0; j < 40; ++j)
      if (j != i) dist.push_back((d.features.row(i) - d.features.row(j)).norm());
    std::sort(dist.begin(), dist.end());
    s(i) = dist[4];
  }
  for (Index i = 0; i < 40; ++i)
    for (Index j = 0; j < 40; ++j)
      if (w(i, j) > 0.0) {
        const double d2 = (d.features.row(i) - d.features.row(j)).squaredNorm();
        CHECK(w(i, j) == doctest::Approx(std::exp(-d2 / (s(i) * s(j)))).epsilon(1e-13));
        CHECK(w(i, j) <= 1.0);
      }
}

TEST_CASE("cosine weights are clamped at zero") {
  Dataset d;
  d.features.resize(4, 2);
  d.features << 1, 0, 0.9, 0.1, -1, 0.05, -0.8, -0.1;
  GraphConfig cfg;
  cfg.k_neighbors = 3;
  cfg.kernel.type = KernelType::cosine;
  cfg.zelnik_perona = false;
  const SparseGraph g = build_knn_graph(d, cfg, 0);
  const Eigen::MatrixXd w(g.weights);
  CHECK(w.minCoeff() >= 0.0);
  CHECK(w.maxCoeff() <= 1.0);
  CHECK(w(0, 1) > 0.9);
  cfg.zelnik_perona = true;
  CHECK_THROWS_AS(cfg.validate(4), std::invalid_argument);
}

TEST_CASE("configuration and degree errors") {
  GraphConfig cfg;
  cfg.k_neighbors = 5;
  CHECK_THROWS_AS(cfg.validate(5), std::invalid_argument);
  cfg.zp_neighbor_index = 6;
  CHECK_THROWS_AS(cfg.validate(10), std::invalid_argument);
  SparseMatrix w(3, 3);
  w.insert(0, 1) = 1.0;
  w.insert(1, 0) = 1.0;
  CHECK_THROWS(graph_from_weights(w));
}

TEST_CASE("normalized Laplacian of small graphs") {
  SparseMatrix w2(2, 2);
  w2.insert(0, 1) = 1.0;
  w2.insert(1, 0) = 1.0;
  Eigen::MatrixXd l2(normalized_laplacian(graph_from_weights(w2)));
  Eigen::MatrixXd expect(2, 2);
  expect << 1, -1, -1, 1;
  CHECK((l2 - expect).cwiseAbs().maxCoeff() < 1e-15);

  SparseMatrix w3(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) w3.insert(i, j) = 1.0;
  const Eigen::MatrixXd l3(normalized_laplacian(graph_from_weights(w3)));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l3);
  CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(es.eigenvalues()(1) == doctest::Approx(1.5));
  CHECK(es.eigenvalues()(2) == doctest::Approx(1.5));
}

TEST_CASE("property: random graphs give symmetric PSD Laplacians with unit diagonal") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    Dataset d;
    d.features = oracle::random_points(60 + 20 * trial, 2 + trial % 3, rng);
    GraphConfig cfg;
    cfg.k_neighbors = 4 + trial % 5;
    const SparseGraph g = build_knn_graph(d, cfg, rng());
    const SparseMatrix l = normalized_laplacian(g);
    const SparseMatrix lt = l.transpose();
    CHECK(max_abs(l - lt) == 0.0);
    const Eigen::MatrixXd ld(l);
    CHECK((ld.diagonal().array() - 1.0).abs().maxCoeff() < 1e-15);
    CHECK((ld - oracle::dense_normalized_laplacian(Eigen::MatrixXd(g.weights))).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ld);
    CHECK(std::abs(es.eigenvalues()(0)) < 1e-10);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("edge list round trip") {
  std::mt19937_64 rng(9);
  Dataset d;
  d.features = oracle::random_points(30, 2, rng);
  const SparseGraph g = build_knn_graph(d, GraphConfig{}, 1);
  const auto path = std::filesystem::temp_directory_path() / "mcal_test_edges.txt";
  write_edge_list(g, path);
  const SparseGraph back = read_edge_list(path);
  CHECK(Eigen::MatrixXd(back.weights) == Eigen::MatrixXd(g.weights));
  CHECK(graph_hash(back) == graph_hash(g));
  std::filesystem::remove(path);
}
