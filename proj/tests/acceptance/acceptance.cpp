// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero on any failure.

#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mcal/acquisition.hpp"
#include "mcal/cli.hpp"
#include "mcal/linalg.hpp"
#include "mcal/loop.hpp"
#include "support/oracles.hpp"

using namespace mcal;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Eigen::VectorXd random_vector(Index n, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, scale);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v(i) = nd(rng);
  return v;
}

Eigen::MatrixXd random_spd(Index n, std::mt19937_64& rng) {
  Eigen::MatrixXd a(n, n);
  for (Index j = 0; j < n; ++j) a.col(j) = random_vector(n, 1.0, rng);
  Eigen::MatrixXd s = a * a.transpose() / static_cast<double>(n);
  s.diagonal().array() += 0.5;
  return s;
}

std::vector<Index> unlabeled_nodes(const LabeledSet& lab, Index n) {
  std::vector<Index> out;
  for (Index i = 0; i < n; ++i)
    if (!lab.contains(i)) out.push_back(i);
  return out;
}

LabeledSet with(const LabeledSet& lab, Index k, Label y) {
  LabeledSet out = lab;
  out.add(k, y);
  return out;
}

Outcome gr_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  double worst_step = 0.0, worst_score = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    auto gi = oracle::random_graph_instance(200, 25, 0.001, rng, 10);
    const LabeledSet lab = oracle::random_labels(200, 4 + trial % 20, 2, true, rng);
    const ModelState st = fit_gr(gi.spectral, lab, 0.5);
    for (Index k : unlabeled_nodes(lab, 200)) {
      const Label y = classify(st, k);
      const Eigen::VectorXd refit = fit_gr(gi.spectral, with(lab, k, y), 0.5).coeffs;
      worst_step = std::max(worst_step, (look_ahead_update_binary(st, k, y) - refit).norm());
      worst_score = std::max(worst_score, std::abs(mc_binary(st, k) - (refit - st.coeffs.col(0)).norm()));
    }
  }
  const double secs = seconds_since(t0);
  return {worst_step <= 1e-8 && worst_score <= 1e-8 && secs < 30.0,
          fmt("max step error %.2e, max score error %.2e, %.1f s", worst_step, worst_score, secs)};
}

Outcome mgr_exactness() {
  std::mt19937_64 rng(102);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    auto gi = oracle::random_graph_instance(200, 25, 0.005, rng, 10);
    const LabeledSet lab = oracle::random_labels(200, 8 + trial % 20, 4, false, rng);
    const ModelState st = fit_mgr(gi.spectral, lab, 0.1);
    for (Index k : unlabeled_nodes(lab, 200)) {
      const ModelState refit = fit_mgr(gi.spectral, with(lab, k, classify(st, k)), 0.1);
      worst = std::max(worst, std::abs(mc_mgr(st, k) - (refit.coeffs - st.coeffs).norm()));
    }
  }
  return {worst <= 1e-8, fmt("max Frobenius score error %.2e", worst)};
}

Outcome truncation_consistency() {
  std::mt19937_64 rng(103);
  double worst = 0.0;
  for (Index n : {60, 120, 200}) {
    for (Family f : {Family::gr, Family::logistic, Family::probit, Family::mgr, Family::ce}) {
      const bool bin = is_binary_family(f);
      const double tau = bin ? 0.001 : 0.005;
      auto gi = oracle::random_graph_instance(n, n, tau, rng, 8);
      const LabeledSet lab = oracle::random_labels(n, 10, bin ? 2 : 3, bin, rng);
      const double gamma = f == Family::mgr ? 0.1 : 0.5;
      const ModelState st = fit_model({f, gamma}, gi.spectral, lab);
      const Eigen::MatrixXd u = oracle::dense_map(f, gi.laplacian, tau, lab, gamma);
      worst = std::max(worst, (st.coeffs - gi.spectral->vectors.transpose() * u).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-6, fmt("max coefficient error %.2e over 5 models, N = M in {60,120,200}", worst)};
}

Outcome derivative_checks() {
  std::mt19937_64 rng(104);
  double worst_ce_g = 0.0, worst_ce_h = 0.0, worst_bin = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto gi = oracle::random_graph_instance(60, 15, 0.005, rng);
    const auto& sd = *gi.spectral;
    const LabeledSet lab = oracle::random_labels(60, 6 + trial % 10, 3, false, rng);
    const Eigen::VectorXd a = random_vector(45, 0.5, rng);
    const LossModel ce{Family::ce, 0.5};
    auto obj = [&](const Eigen::VectorXd& x) {
      return eval_objective(ce, Eigen::Map<const Eigen::MatrixXd>(x.data(), 15, 3), sd, lab);
    };
    worst_ce_g = std::max(worst_ce_g, oracle::relative_error(ce_gradient(a, sd, lab, 0.5), oracle::fd_gradient(obj, a)));
    worst_ce_h = std::max(worst_ce_h, oracle::relative_error(
                                          ce_hessian(a, sd, lab, 0.5),
                                          oracle::fd_jacobian([&](const Eigen::VectorXd& x) { return ce_gradient(x, sd, lab, 0.5); }, a)));

    const LabeledSet blab = oracle::random_labels(60, 6 + trial % 10, 2, true, rng);
    const Eigen::VectorXd b = random_vector(15, 0.5, rng);
    for (Family f : {Family::logistic, Family::probit}) {
      const LossModel m{f, 0.5};
      auto bobj = [&](const Eigen::VectorXd& x) { return eval_objective(m, x, sd, blab); };
      worst_bin = std::max(worst_bin, oracle::relative_error(binary_gradient(m, b, sd, blab), oracle::fd_gradient(bobj, b)));
      worst_bin = std::max(worst_bin, oracle::relative_error(binary_hessian(m, b, sd, blab),
                                                             oracle::fd_jacobian([&](const Eigen::VectorXd& x) {
                                                               return binary_gradient(m, x, sd, blab);
                                                             }, b)));
    }
  }
  return {worst_ce_g <= 1e-5 && worst_ce_h <= 1e-5 && worst_bin <= 1e-5,
          fmt("CE gradient %.2e, CE Hessian %.2e, binary %.2e (relative)", worst_ce_g, worst_ce_h, worst_bin)};
}

Outcome ce_convexity() {
  std::mt19937_64 rng(105);
  auto gi = oracle::random_graph_instance(60, 15, 0.005, rng);
  const auto& sd = *gi.spectral;
  double worst = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 100; ++trial) {
    const LabeledSet lab = oracle::random_labels(60, 3 + trial % 30, 3, false, rng);
    const Eigen::VectorXd a = random_vector(45, 0.1 + 0.1 * (trial % 40), rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ce_hessian(a, sd, lab, 0.5), Eigen::EigenvaluesOnly);
    worst = std::min(worst, es.eigenvalues().minCoeff() - sd.tau * sd.tau);
  }
  return {worst >= -1e-10, fmt("min over 100 points of lambda_min - tau^2 = %.3e", worst)};
}

Outcome identities() {
  std::mt19937_64 rng(106);
  double wood = 0.0, frob = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 5 + trial % 25, k = 1 + trial % 5;
    const Eigen::MatrixXd a = random_spd(n, rng), c = random_spd(k, rng);
    Eigen::MatrixXd u(n, k);
    for (Index j = 0; j < k; ++j) u.col(j) = random_vector(n, 1.0, rng);
    const Eigen::MatrixXd direct = (a + u * c * u.transpose()).inverse();
    wood = std::max(wood, (direct - woodbury_inverse(a.inverse(), u, c, u.transpose())).cwiseAbs().maxCoeff());
    const Eigen::VectorXd s = random_vector(n, 1.0, rng), t = random_vector(k + 2, 1.0, rng);
    frob = std::max(frob, std::abs(rank_one_frobenius_norm(s, t) - (s * t.transpose()).norm()));
  }
  return {wood <= 1e-8 && frob <= 1e-8, fmt("Woodbury %.2e, rank-one Frobenius %.2e", wood, frob)};
}

Outcome ce_oracle() {
  std::mt19937_64 rng(107);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto gi = oracle::random_graph_instance(80, 15, 0.005, rng);
    const LabeledSet lab = oracle::random_labels(80, 6 + trial % 12, 3, false, rng);
    const ModelState st = fit_ce(gi.spectral, lab, 0.5);
    for (Index k : unlabeled_nodes(lab, 80)) worst = std::max(worst, std::abs(mc_ce(st, k) - oracle::dense_ce_lookahead_change(st, k)));
  }
  return {worst <= 1e-8, fmt("max |mc_ce - dense look-ahead| = %.2e", worst)};
}

Outcome design_criteria() {
  std::mt19937_64 rng(108);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const bool bin = trial % 2 == 0;
    auto gi = oracle::random_graph_instance(150, 25, 0.001, rng);
    const LabeledSet lab = oracle::random_labels(150, 8 + trial, bin ? 2 : 3, bin, rng);
    const double gamma = bin ? 0.5 : 0.1;
    const ModelState st = bin ? fit_gr(gi.spectral, lab, gamma) : fit_mgr(gi.spectral, lab, gamma);
    const Eigen::MatrixXd& v = gi.spectral->vectors;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(150);
    const Eigen::MatrixXd full = v * st.covariance * v.transpose();
    const double trace = full.trace(), risk = ones.dot(full * ones);
    const Eigen::MatrixXd prec = st.covariance.inverse();
    for (Index k : unlabeled_nodes(lab, 150)) {
      const Eigen::VectorXd vk = v.row(k).transpose();
      const Eigen::MatrixXd plus = v * (prec + vk * vk.transpose() / (gamma * gamma)).inverse() * v.transpose();
      worst = std::max(worst, std::abs(vopt(st, k) - (trace - plus.trace())));
      worst = std::max(worst, std::abs(sopt(st, k) - (risk - ones.dot(plus * ones))));
    }
  }
  return {worst <= 1e-8, fmt("max deviation from direct trace / survey-risk downdates %.2e", worst)};
}

Outcome binary_clusters_benchmark() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.graph.k_neighbors = 10;
  cfg.graph.kernel.sigma = 3.0;
  cfg.graph.zelnik_perona = true;
  cfg.spectral_m = 50;
  cfg.tau = 0.001;
  cfg.gamma = 0.5;
  cfg.loop.model = Family::gr;
  cfg.loop.batch_size = 5;
  cfg.loop.iterations = 100;
  cfg.loop.initial_per_class = 1;
  const Prepared prep = prepare_experiment(cfg);

  auto mean_final = [&](AcqMethod acq) {
    double sum = 0.0;
    for (std::uint64_t t = 0; t < 5; ++t) {
      LoopConfig loop = cfg.resolved_loop();
      loop.acquisition = acq;
      loop.seed = t;
      const RunRecord r = run_active_learning(loop, prep.data, prep.spectral);
      sum += r.iterations.back().accuracy.value_or(0.0);
    }
    return sum / 5.0;
  };
  const double mc = mean_final(AcqMethod::mc), rnd = mean_final(AcqMethod::rand);
  const double secs = seconds_since(t0);
  return {mc - rnd >= 0.02 && mc >= 0.85 && secs < 300.0,
          fmt("MC-GR %.4f vs RAND-GR %.4f", mc, rnd) + fmt(" (%.1f s)", secs)};
}

// Mean acquisition seconds per scored candidate over 5 MC-GR iterations.
double per_candidate_seconds(Index n) {
  ExperimentConfig cfg;
  cfg.dataset_size = n;
  cfg.spectral_m = 50;
  const Prepared prep = prepare_experiment(cfg);
  LoopConfig loop = cfg.resolved_loop();
  loop.batch_size = 5;
  loop.iterations = 5;
  ActiveLearner learner(loop, prep.data, prep.spectral);
  double secs = 0.0;
  std::size_t cands = 0;
  while (!learner.done()) {
    std::vector<std::pair<Index, Label>> answers;
    for (const auto& q : learner.propose())
      answers.emplace_back(q.index, (*prep.data->ground_truth)[static_cast<std::size_t>(q.index)]);
    learner.submit(answers);
    secs += learner.record().iterations.back().acq_seconds;
    cands += learner.record().iterations.back().candidate_count;
  }
  return secs / static_cast<double>(cands);
}

Outcome scaling() {
  const double small = per_candidate_seconds(2000), large = per_candidate_seconds(20000);
  const double ratio = large / small;
  return {ratio <= 3.0, fmt("%.3g us at N=2000, %.3g us at N=20000, ratio %.2f", small * 1e6, large * 1e6, ratio)};
}

Outcome eigensolver() {
  std::mt19937_64 rng(111);
  double res = 0.0, orth = 0.0, spec = 0.0;
  for (Index n : {120, 250, 380, 500}) {
    Dataset d;
    d.features = oracle::random_points(n, 2, rng);
    const SparseGraph g = build_knn_graph(d, GraphConfig{}, rng());
    const SparseMatrix l = normalized_laplacian(g);
    const Index m = std::min<Index>(50, n);
    const SpectralDecomposition sd = smallest_eigenpairs(l, m, 0.001);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(l)};
    res = std::max(res, max_residual(l, sd));
    orth = std::max(orth, (sd.vectors.transpose() * sd.vectors - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff());
    spec = std::max(spec, (sd.values - es.eigenvalues().head(m)).cwiseAbs().maxCoeff());
  }
  return {res <= 1e-8 && orth <= 1e-8 && spec <= 1e-8,
          fmt("residual %.2e, orthonormality %.2e, spectrum %.2e", res, orth, spec)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"GR look-ahead exactness", gr_exactness},
      {"MGR look-ahead exactness", mgr_exactness},
      {"truncation consistency", truncation_consistency},
      {"gradient and Hessian checks", derivative_checks},
      {"CE strict convexity", ce_convexity},
      {"Woodbury and rank-one identities", identities},
      {"CE model-change oracle", ce_oracle},
      {"V-Opt / Sigma-Opt equivalence", design_criteria},
      {"Binary-Clusters benchmark", binary_clusters_benchmark},
      {"per-candidate scaling", scaling},
      {"eigensolver certification", eigensolver},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
