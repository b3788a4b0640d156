#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mcal/acquisition.hpp"
#include "mcal/graph.hpp"
#include "mcal/models.hpp"
#include "mcal/spectral.hpp"

namespace mcal {

struct LoopConfig {
  Family model = Family::gr;
  AcqMethod acquisition = AcqMethod::mc;
  double gamma = 0.5;
  std::size_t batch_size = 5;
  int iterations = 100;
  double candidate_fraction = 0.1;
  // With batch_size 1, score all of U instead of a random candidate subset.
  bool sequential_full_scan = true;
  int initial_per_class = 1;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  NewtonOptions newton{};

  void validate() const;
};

struct IterationRecord {
  int iter = 0;
  std::size_t num_labeled = 0;  // after this iteration's labels were added
  std::vector<Index> chosen;
  std::vector<Label> pseudo_labels;  // 0 when no model was available
  std::vector<Label> oracle_labels;
  std::vector<double> scores;
  std::optional<double> accuracy;  // on the updated unlabeled set
  double acq_seconds = 0.0;
  std::size_t candidate_count = 0;
};

struct RunRecord {
  LoopConfig config;
  std::vector<Index> initial_indices;
  std::vector<Label> initial_labels;
  std::optional<double> initial_accuracy;
  std::vector<IterationRecord> iterations;
};

struct PendingQuery {
  Index index = 0;
  Label pseudo_label = 0;
  double score = 0.0;
};

// Rejected label submission. `bad_label` marks a label outside the alphabet; every other
// code is a conflict with the pending batch.
class SubmissionError : public std::runtime_error {
 public:
  enum class Code { not_pending, partial, duplicate, no_pending, bad_label };
  SubmissionError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

// Fraction of eval_set whose predicted label matches the ground truth.
double accuracy(const ModelState& state, const Dataset& data, const std::vector<Index>& eval_set);

// ceil(fraction |U|) distinct indices drawn uniformly without replacement.
std::vector<Index> sample_candidates(const std::vector<Index>& unlabeled, double fraction,
                                     std::mt19937_64& rng, std::size_t min_size = 1);

// `per_class` nodes drawn uniformly from every class of the ground truth.
LabeledSet initial_labels(const Dataset& data, int per_class, std::mt19937_64& rng);

// Steppable active-learning session: propose() publishes a query batch, submit() applies
// the oracle's labels, refits and records the iteration. Single writer.
class ActiveLearner {
 public:
  // Draws the initial labels from the ground truth when it is present; otherwise starts
  // unlabeled and the first batch is sampled at random.
  ActiveLearner(LoopConfig cfg, std::shared_ptr<const Dataset> data,
                std::shared_ptr<const SpectralDecomposition> spectral);

  bool done() const;
  bool has_pending() const { return !pending_.empty(); }
  const std::vector<PendingQuery>& pending() const { return pending_; }
  // Selects the next batch; a no-op returning the current batch if one is pending.
  const std::vector<PendingQuery>& propose();
  // Labels must cover the pending batch exactly. Throws SubmissionError.
  void submit(const std::vector<std::pair<Index, Label>>& labels);

  const RunRecord& record() const { return record_; }
  const LabeledSet& labeled() const { return labeled_; }
  const std::vector<Index>& unlabeled() const { return unlabeled_; }
  const ModelState* model() const { return model_ ? &*model_ : nullptr; }
  const LoopConfig& config() const { return cfg_; }
  const Dataset& data() const { return *data_; }
  // Acquisition evaluations spent on the last proposal.
  std::size_t last_evaluations() const { return last_evaluations_; }
  std::optional<double> latest_accuracy() const;

 private:
  void refit();
  std::optional<double> current_accuracy() const;

  LoopConfig cfg_;
  std::shared_ptr<const Dataset> data_;
  std::shared_ptr<const SpectralDecomposition> spectral_;
  std::mt19937_64 rng_;
  LabeledSet labeled_;
  std::vector<Index> unlabeled_;  // ascending
  std::optional<ModelState> model_;
  std::vector<PendingQuery> pending_;
  IterationRecord pending_record_;
  RunRecord record_;
  std::size_t last_evaluations_ = 0;
};

// Full benchmark loop with the ground-truth oracle.
RunRecord run_active_learning(const LoopConfig& cfg, std::shared_ptr<const Dataset> data,
                              std::shared_ptr<const SpectralDecomposition> spectral);

// accuracy.csv and choices.csv in `dir`.
void write_run_record(const RunRecord& record, const std::filesystem::path& dir);

}  // namespace mcal
