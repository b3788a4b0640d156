#include "mcal/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "mcal/graph.hpp"
#include "mcal/linalg.hpp"

namespace mcal {

std::string_view acq_name(AcqMethod m) {
  switch (m) {
    case AcqMethod::mc: return "mc";
    case AcqMethod::vopt: return "vopt";
    case AcqMethod::sopt: return "sopt";
    case AcqMethod::unc: return "unc";
    case AcqMethod::rand: return "rand";
  }
  return "?";
}

AcqMethod parse_acq(std::string_view name) {
  if (name == "mc") return AcqMethod::mc;
  if (name == "vopt") return AcqMethod::vopt;
  if (name == "sopt") return AcqMethod::sopt;
  if (name == "unc") return AcqMethod::unc;
  if (name == "rand") return AcqMethod::rand;
  throw std::invalid_argument("unknown acquisition function '" + std::string(name) + "'");
}

namespace {

void require_binary(const ModelState& s) {
  if (!s.binary_model()) throw std::invalid_argument("binary model state required");
}

void require_quadratic(const ModelState& s) {
  if (s.loss.family != Family::gr && s.loss.family != Family::mgr)
    throw std::invalid_argument("V-Opt and Sigma-Opt need a GR or MGR model");
}

Index argmax(const Eigen::VectorXd& u) {
  Index best = 0;
  for (Index c = 1; c < u.size(); ++c)
    if (u(c) > u(best)) best = c;
  return best;
}

double top_two_gap(const Eigen::VectorXd& u) {
  if (u.size() < 2) return 0.0;
  double first = -std::numeric_limits<double>::infinity();
  double second = first;
  for (Index c = 0; c < u.size(); ++c) {
    if (u(c) > first) {
      second = first;
      first = u(c);
    } else if (u(c) > second) {
      second = u(c);
    }
  }
  return first - second;
}

}  // namespace

Eigen::VectorXd look_ahead_update_binary(const ModelState& state, Index k, Label y_hat) {
  require_binary(state);
  const Eigen::VectorXd v = state.spectral->row(k);
  const Eigen::VectorXd cv = state.covariance * v;
  const Eigen::VectorXd alpha = state.coeffs.col(0);
  const LossDerivatives d = loss_derivatives(state.loss, v.dot(alpha), y_hat);
  return alpha - (d.f / (1.0 + d.fprime * v.dot(cv))) * cv;
}

double mc_binary(const ModelState& state, Index k) {
  require_binary(state);
  const Eigen::VectorXd v = state.spectral->row(k);
  const Eigen::VectorXd cv = state.covariance * v;
  const double s = v.dot(cv);
  const double u = v.dot(state.coeffs.col(0));
  const double g = state.loss.gamma;
  const double a = std::abs(u);
  switch (state.loss.family) {
    case Family::gr:
      return std::abs(u - (u >= 0.0 ? 1.0 : -1.0)) / (g * g + s) * cv.norm();
    case Family::logistic: {
      const double q = std::exp(-a / g);
      return g * q * (1.0 + q) / (g * g * (1.0 + q) * (1.0 + q) + q * s) * cv.norm();
    }
    case Family::probit: {
      const double r = normal_hazard_ratio(a / g) / g;
      return r / std::abs(1.0 + (r * r + a * r / (g * g)) * s) * cv.norm();
    }
    default:
      break;
  }
  throw std::invalid_argument("mc_binary: unsupported family");
}

double mc_mgr(const ModelState& state, Index k) {
  if (state.loss.family != Family::mgr) throw std::invalid_argument("mc_mgr needs an MGR state");
  const Eigen::VectorXd v = state.spectral->row(k);
  const Eigen::VectorXd cv = state.covariance * v;
  Eigen::VectorXd resid = state.coeffs.transpose() * v;
  resid(argmax(resid)) -= 1.0;
  const double g = state.loss.gamma;
  return rank_one_frobenius_norm(cv, resid) / (g * g + v.dot(cv));
}

double mc_ce(const ModelState& state, Index k) {
  if (state.loss.family != Family::ce) throw std::invalid_argument("mc_ce needs a CE state");
  const Index m = state.spectral->rank();
  const Index nc = state.coeffs.cols();
  const double g = state.loss.gamma;
  const Eigen::VectorXd v = state.spectral->row(k);
  const Eigen::VectorXd pi = softmax(state.coeffs.transpose() * v, g);

  Eigen::VectorXd w = pi;
  w(argmax(pi)) -= 1.0;

  // cvk = C V_k^T (M n_c x n_c) and G = V_k C V_k^T / gamma^2.
  Eigen::MatrixXd cvk(m * nc, nc);
  for (Index d = 0; d < nc; ++d) cvk.col(d) = state.covariance.middleCols(d * m, m) * v;
  Eigen::MatrixXd gk(nc, nc);
  for (Index c = 0; c < nc; ++c) gk.row(c) = v.transpose() * cvk.middleRows(c * m, m);
  gk = (0.5 / (g * g)) * (gk + gk.transpose()).eval();

  Eigen::MatrixXd bk = -pi * pi.transpose();
  bk.diagonal() += pi;
  const Eigen::MatrixXd t = pivoted_semidefinite_factor(bk);

  Eigen::VectorXd z = w;
  if (t.rows() > 0) {
    Eigen::MatrixXd inner = t * gk * t.transpose();
    inner.diagonal().array() += 1.0;
    z -= t.transpose() * inner.llt().solve(t * (gk * w));
  }
  return (cvk * z).norm() / g;
}

double vopt(const ModelState& state, Index k) {
  require_quadratic(state);
  const Eigen::VectorXd v = state.spectral->row(k);
  const Eigen::VectorXd cv = state.covariance * v;
  const double g = state.loss.gamma;
  return cv.squaredNorm() / (g * g + v.dot(cv));
}

double sopt(const ModelState& state, Index k, const Eigen::VectorXd& v_ones) {
  require_quadratic(state);
  const Eigen::VectorXd v = state.spectral->row(k);
  const Eigen::VectorXd cv = state.covariance * v;
  const double g = state.loss.gamma;
  const double p = v_ones.dot(cv);
  return p * p / (g * g + v.dot(cv));
}

double sopt(const ModelState& state, Index k) {
  return sopt(state, k, state.spectral->vectors.colwise().sum().transpose());
}

double unc(const ModelState& state, Index k) {
  const Eigen::VectorXd u = state.node_scores(k);
  if (state.binary_model()) return -std::abs(u(0));
  if (state.loss.family == Family::ce) return -top_two_gap(softmax(u, state.loss.gamma));
  return -top_two_gap(u);
}

Scorer::Scorer(const ModelState& state) : state_(state) {
  if (!state.spectral) throw std::invalid_argument("model state has no spectral decomposition");
  if (state.loss.family == Family::gr || state.loss.family == Family::mgr)
    v_ones_ = state.spectral->vectors.colwise().sum().transpose();
}

double Scorer::score(AcqMethod method, Index k) const {
  if (k < 0 || k >= state_.spectral->num_nodes()) throw std::out_of_range("node index out of range");
  evaluations_.fetch_add(1, std::memory_order_relaxed);
  switch (method) {
    case AcqMethod::mc:
      switch (state_.loss.family) {
        case Family::mgr: return mc_mgr(state_, k);
        case Family::ce: return mc_ce(state_, k);
        default: return mc_binary(state_, k);
      }
    case AcqMethod::vopt: return vopt(state_, k);
    case AcqMethod::sopt: return sopt(state_, k, v_ones_);
    case AcqMethod::unc: return unc(state_, k);
    case AcqMethod::rand: break;
  }
  throw std::invalid_argument("random acquisition has no scores");
}

AcquisitionScores score_candidates(const Scorer& scorer, AcqMethod method,
                                   const std::vector<Index>& candidates, unsigned threads) {
  AcquisitionScores out;
  out.method = method;
  out.entries.resize(candidates.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Index k = candidates[i];
      const double s = scorer.score(method, k);
      if (!std::isfinite(s)) throw std::runtime_error("non-finite acquisition score at node " + std::to_string(k));
      out.entries[i] = {k, s, classify(scorer.state(), k)};
    }
  };
  const std::size_t n = candidates.size();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n / 64 + 1)));
  if (threads == 1) {
    work(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  const std::size_t chunk = (n + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t b = std::min(n, t * chunk), e = std::min(n, b + chunk);
    pool.emplace_back([&, t, b, e] {
      try {
        work(b, e);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return out;
}

std::vector<Index> select_query_set(const AcquisitionScores& scores, std::size_t batch) {
  if (scores.entries.size() < batch)
    throw std::invalid_argument("fewer scored candidates than the batch size");
  std::vector<CandidateScore> sorted = scores.entries;
  std::partial_sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(batch), sorted.end(),
                    [](const CandidateScore& a, const CandidateScore& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.index < b.index;
                    });
  std::vector<Index> out;
  out.reserve(batch);
  for (std::size_t i = 0; i < batch; ++i) out.push_back(sorted[i].index);
  return out;
}

}  // namespace mcal
