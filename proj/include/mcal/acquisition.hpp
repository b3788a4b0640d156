#pragma once

#include <atomic>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mcal/models.hpp"

namespace mcal {

enum class AcqMethod { mc, vopt, sopt, unc, rand };

std::string_view acq_name(AcqMethod m);
AcqMethod parse_acq(std::string_view name);

struct CandidateScore {
  Index index = 0;
  double score = 0.0;
  Label pseudo_label = 0;  // classify(state, index)
};

struct AcquisitionScores {
  AcqMethod method = AcqMethod::mc;
  std::vector<CandidateScore> entries;
};

// One Newton step on the binary look-ahead objective with (k, y_hat) appended.
Eigen::VectorXd look_ahead_update_binary(const ModelState& state, Index k, Label y_hat);

// Model-change scores with the pseudo-label taken from the current classifier.
double mc_binary(const ModelState& state, Index k);
double mc_mgr(const ModelState& state, Index k);
double mc_ce(const ModelState& state, Index k);

// V-Opt and Sigma-Opt need a quadratic-loss (GR or MGR) covariance. `v_ones` is V^T 1.
double vopt(const ModelState& state, Index k);
double sopt(const ModelState& state, Index k, const Eigen::VectorXd& v_ones);
double sopt(const ModelState& state, Index k);

// Least margin: binary -|u_k|; multiclass minus the gap between the top two class scores
// (softmax probabilities for CE).
double unc(const ModelState& state, Index k);

// Per-state scoring context. Caches V^T 1 and counts how many nodes were scored.
class Scorer {
 public:
  explicit Scorer(const ModelState& state);

  double score(AcqMethod method, Index k) const;
  const ModelState& state() const { return state_; }
  std::size_t evaluations() const { return evaluations_.load(); }

 private:
  const ModelState& state_;
  Eigen::VectorXd v_ones_;
  mutable std::atomic<std::size_t> evaluations_{0};
};

// Scores each candidate (not rand). `threads` > 1 splits the candidates across workers;
// the result order follows `candidates` regardless.
AcquisitionScores score_candidates(const Scorer& scorer, AcqMethod method,
                                   const std::vector<Index>& candidates, unsigned threads = 1);

// The B highest scores, descending, ties to the lower index.
std::vector<Index> select_query_set(const AcquisitionScores& scores, std::size_t batch);

}  // namespace mcal
