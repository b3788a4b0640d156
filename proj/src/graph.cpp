#include "mcal/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

namespace mcal {

void Dataset::validate() const {
  if (features.rows() < 2) throw std::invalid_argument("dataset needs at least 2 points");
  if (features.cols() < 1) throw std::invalid_argument("dataset needs at least 1 feature");
  if (!features.allFinite()) throw std::invalid_argument("dataset features must be finite");
  if (n_classes < 2) throw std::invalid_argument("dataset needs at least 2 classes");
  if (binary && n_classes != 2) throw std::invalid_argument("binary dataset must have 2 classes");
  if (ground_truth) {
    if (static_cast<Index>(ground_truth->size()) != features.rows())
      throw std::invalid_argument("ground truth length does not match feature rows");
    for (Label y : *ground_truth) {
      if (!label_in_alphabet(y, n_classes, binary))
        throw std::invalid_argument("ground truth label " + std::to_string(y) +
                                    " outside the label alphabet");
    }
  }
}

int class_index(Label label, bool binary) {
  if (binary) return label == 1 ? 0 : 1;
  return label - 1;
}

Label label_from_class(int class_idx, bool binary) {
  if (binary) return class_idx == 0 ? 1 : -1;
  return class_idx + 1;
}

bool label_in_alphabet(Label label, int n_classes, bool binary) {
  if (binary) return label == 1 || label == -1;
  return label >= 1 && label <= n_classes;
}

void GraphConfig::validate(Index n_nodes) const {
  if (k_neighbors < 1) throw std::invalid_argument("k_neighbors must be positive");
  if (k_neighbors >= n_nodes)
    throw std::invalid_argument("k_neighbors must be smaller than the number of nodes");
  if (kernel.type == KernelType::gaussian && !(kernel.sigma > 0.0))
    throw std::invalid_argument("gaussian kernel width must be positive");
  if (zelnik_perona) {
    if (kernel.type != KernelType::gaussian)
      throw std::invalid_argument("Zelnik-Perona scaling applies to the gaussian kernel only");
    if (zp_neighbor_index < 0 || zp_index() > k_neighbors)
      throw std::invalid_argument("zp_neighbor_index must lie in [1, k_neighbors]");
  }
}

double compute_similarity(const Eigen::Ref<const Eigen::VectorXd>& xi,
                          const Eigen::Ref<const Eigen::VectorXd>& xj, const Kernel& kernel) {
  if (xi.size() != xj.size()) throw std::invalid_argument("feature dimension mismatch");
  switch (kernel.type) {
    case KernelType::gaussian:
      if (!(kernel.sigma > 0.0)) throw std::invalid_argument("gaussian kernel width must be positive");
      return std::exp(-(xi - xj).squaredNorm() / kernel.sigma);
    case KernelType::cosine: {
      const double ni = xi.norm();
      const double nj = xj.norm();
      if (ni == 0.0 || nj == 0.0) throw std::invalid_argument("cosine kernel on a zero vector");
      return xi.dot(xj) / (ni * nj);
    }
  }
  return 0.0;
}

namespace {

struct Neighbor {
  double distance;
  std::uint32_t priority;
  Index node;

  bool operator<(const Neighbor& o) const {
    if (distance != o.distance) return distance < o.distance;
    return priority < o.priority;
  }
};

}  // namespace

SparseGraph build_knn_graph(const Dataset& data, const GraphConfig& cfg, std::uint64_t rng_seed) {
  const Index n = data.size();
  if (n < 2) throw std::invalid_argument("dataset needs at least 2 points");
  cfg.validate(n);
  const auto& x = data.features;
  const int k = cfg.k_neighbors;
  const bool cosine = cfg.kernel.type == KernelType::cosine;

  // Random tie-break priorities.
  std::vector<std::uint32_t> priority(static_cast<std::size_t>(n));
  std::iota(priority.begin(), priority.end(), 0u);
  std::mt19937_64 rng(rng_seed);
  std::shuffle(priority.begin(), priority.end(), rng);

  Eigen::VectorXd norms;
  if (cosine) {
    norms = x.rowwise().norm();
    for (Index i = 0; i < n; ++i)
      if (norms(i) == 0.0) throw std::invalid_argument("cosine kernel on a zero feature vector");
  }

  // neighbors(i, r) is the r-th nearest neighbor of i; sqdist holds squared Euclidean
  // distances for the Zelnik-Perona scales and Gaussian weights.
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> neighbors(n, k);
  Eigen::MatrixXd sqdist(n, k);
  Eigen::MatrixXd sim(n, k);
  std::vector<Neighbor> cand(static_cast<std::size_t>(n - 1));
  for (Index i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      double d;
      if (cosine) {
        d = 1.0 - x.row(i).dot(x.row(j)) / (norms(i) * norms(j));
      } else {
        d = (x.row(i) - x.row(j)).squaredNorm();
      }
      cand[c++] = Neighbor{d, priority[static_cast<std::size_t>(j)], j};
    }
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
    for (int r = 0; r < k; ++r) {
      const Index j = cand[static_cast<std::size_t>(r)].node;
      neighbors(i, r) = j;
      if (cosine) {
        sim(i, r) = 1.0 - cand[static_cast<std::size_t>(r)].distance;
      } else {
        sqdist(i, r) = cand[static_cast<std::size_t>(r)].distance;
      }
    }
  }

  Eigen::VectorXd scale;
  if (cfg.zelnik_perona) {
    const int r = cfg.zp_index() - 1;
    scale.resize(n);
    for (Index i = 0; i < n; ++i) {
      scale(i) = std::sqrt(sqdist(i, r));
      if (scale(i) == 0.0)
        throw std::invalid_argument("Zelnik-Perona local scale is zero (duplicate points) at node " +
                                    std::to_string(i));
    }
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(2 * n * k));
  for (Index i = 0; i < n; ++i) {
    for (int r = 0; r < k; ++r) {
      const Index j = neighbors(i, r);
      double w;
      if (cosine) {
        w = std::max(0.0, sim(i, r));
      } else if (cfg.zelnik_perona) {
        w = std::exp(-sqdist(i, r) / (scale(i) * scale(j)));
      } else {
        w = std::exp(-sqdist(i, r) / cfg.kernel.sigma);
      }
      if (w <= 0.0) continue;
      triplets.emplace_back(i, j, w);
      triplets.emplace_back(j, i, w);
    }
  }
  SparseMatrix w(n, n);
  w.setFromTriplets(triplets.begin(), triplets.end(),
                    [](double a, double b) { return std::max(a, b); });
  return graph_from_weights(w);
}

SparseGraph graph_from_weights(const SparseMatrix& weights) {
  if (weights.rows() != weights.cols()) throw std::invalid_argument("weight matrix must be square");
  SparseGraph g;
  g.weights = weights;
  g.weights.prune([](Index row, Index col, double v) { return row != col && v != 0.0; });
  g.weights.makeCompressed();
  const Index n = g.weights.rows();
  g.degrees = Eigen::VectorXd::Zero(n);
  for (Index col = 0; col < g.weights.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(g.weights, col); it; ++it) {
      if (it.value() < 0.0) throw std::invalid_argument("negative edge weight");
      g.degrees(it.row()) += it.value();
    }
  }
  for (Index i = 0; i < n; ++i) {
    if (!(g.degrees(i) > 0.0))
      throw std::runtime_error("node " + std::to_string(i) + " has zero degree");
  }
  return g;
}

SparseMatrix normalized_laplacian(const SparseGraph& g) {
  const Index n = g.size();
  Eigen::VectorXd inv_sqrt(n);
  for (Index i = 0; i < n; ++i) {
    if (!(g.degrees(i) > 0.0))
      throw std::invalid_argument("node " + std::to_string(i) + " has zero degree");
    inv_sqrt(i) = 1.0 / std::sqrt(g.degrees(i));
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(g.weights.nonZeros() + n));
  for (Index i = 0; i < n; ++i) triplets.emplace_back(i, i, 1.0);
  for (Index col = 0; col < g.weights.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(g.weights, col); it; ++it) {
      triplets.emplace_back(it.row(), col, -inv_sqrt(it.row()) * it.value() * inv_sqrt(col));
    }
  }
  SparseMatrix lap(n, n);
  lap.setFromTriplets(triplets.begin(), triplets.end());
  SparseMatrix lap_t = lap.transpose();
  SparseMatrix sym = 0.5 * (lap + lap_t);
  sym.makeCompressed();
  return sym;
}

void write_edge_list(const SparseGraph& g, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "# nodes " << g.size() << '\n';
  char buf[96];
  for (Index col = 0; col < g.weights.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(g.weights, col); it; ++it) {
      if (it.row() >= col) continue;
      std::snprintf(buf, sizeof(buf), "%lld %lld %.17g\n", static_cast<long long>(it.row()),
                    static_cast<long long>(col), it.value());
      out << buf;
    }
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

SparseGraph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  Index n = -1;
  Index max_node = -1;
  std::vector<Eigen::Triplet<double>> triplets;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      long long value = 0;
      if (hs >> key >> value && key == "nodes") n = static_cast<Index>(value);
      continue;
    }
    std::istringstream ls(line);
    long long i = 0, j = 0;
    double w = 0.0;
    if (!(ls >> i >> j >> w) || i < 0 || j < 0)
      throw std::runtime_error("malformed edge on line " + std::to_string(line_no));
    triplets.emplace_back(i, j, w);
    triplets.emplace_back(j, i, w);
    max_node = std::max<Index>(max_node, std::max<Index>(i, j));
  }
  if (n < 0) n = max_node + 1;
  if (max_node >= n) throw std::runtime_error("edge references node beyond declared count");
  SparseMatrix w(n, n);
  w.setFromTriplets(triplets.begin(), triplets.end(),
                    [](double a, double b) { return std::max(a, b); });
  return graph_from_weights(w);
}

std::uint64_t graph_hash(const SparseGraph& g) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t b = 0; b < len; ++b) {
      h ^= p[b];
      h *= 1099511628211ull;
    }
  };
  const std::int64_t n = g.size();
  mix(&n, sizeof(n));
  for (Index col = 0; col < g.weights.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(g.weights, col); it; ++it) {
      const std::int64_t r = it.row();
      const std::int64_t c = col;
      const double v = it.value();
      mix(&r, sizeof(r));
      mix(&c, sizeof(c));
      mix(&v, sizeof(v));
    }
  }
  return h;
}

}  // namespace mcal
