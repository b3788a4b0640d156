#include "mcal/loop.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

namespace mcal {

void LoopConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  if (!(candidate_fraction > 0.0 && candidate_fraction <= 1.0))
    throw std::invalid_argument("candidate_fraction must lie in (0, 1]");
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be positive");
  if (initial_per_class < 1) throw std::invalid_argument("initial_per_class must be at least 1");
  if (newton.max_iter < 1 || !(newton.tol > 0.0)) throw std::invalid_argument("bad Newton options");
}

double accuracy(const ModelState& state, const Dataset& data, const std::vector<Index>& eval_set) {
  if (!data.ground_truth) throw std::invalid_argument("accuracy needs ground-truth labels");
  if (eval_set.empty()) throw std::invalid_argument("accuracy needs a nonempty evaluation set");
  std::size_t hits = 0;
  for (Index k : eval_set)
    if (classify(state, k) == (*data.ground_truth)[static_cast<std::size_t>(k)]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(eval_set.size());
}

std::vector<Index> sample_candidates(const std::vector<Index>& unlabeled, double fraction,
                                     std::mt19937_64& rng, std::size_t min_size) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("fraction must lie in (0, 1]");
  const std::size_t n = unlabeled.size();
  auto count = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  count = std::min(count, n);
  if (count < min_size)
    throw std::invalid_argument("candidate set of " + std::to_string(count) +
                                " is smaller than the batch size " + std::to_string(min_size));
  if (count == n) return unlabeled;
  std::vector<Index> pool = unlabeled;
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(count);
  return pool;
}

LabeledSet initial_labels(const Dataset& data, int per_class, std::mt19937_64& rng) {
  if (!data.ground_truth) throw std::invalid_argument("initial labels need ground truth");
  std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(data.n_classes));
  for (Index i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(class_index((*data.ground_truth)[static_cast<std::size_t>(i)], data.binary))]
        .push_back(i);
  LabeledSet out(data.n_classes, data.binary);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    const auto& members = by_class[c];
    if (members.empty()) continue;
    const double frac = std::min(1.0, per_class / static_cast<double>(members.size()));
    for (Index k : sample_candidates(members, frac, rng))
      out.add(k, label_from_class(static_cast<int>(c), data.binary));
  }
  return out;
}

ActiveLearner::ActiveLearner(LoopConfig cfg, std::shared_ptr<const Dataset> data,
                             std::shared_ptr<const SpectralDecomposition> spectral)
    : cfg_(cfg), data_(std::move(data)), spectral_(std::move(spectral)), rng_(cfg.seed) {
  cfg_.validate();
  data_->validate();
  if (spectral_->num_nodes() != data_->size())
    throw std::invalid_argument("spectral decomposition and dataset sizes differ");
  if (is_binary_family(cfg_.model) && !data_->binary)
    throw std::invalid_argument(std::string(family_name(cfg_.model)) +
                                " is a binary model but the dataset is multiclass");
  labeled_ = data_->ground_truth ? initial_labels(*data_, cfg_.initial_per_class, rng_)
                                 : LabeledSet(data_->n_classes, data_->binary);
  for (Index i = 0; i < data_->size(); ++i)
    if (!labeled_.contains(i)) unlabeled_.push_back(i);
  record_.config = cfg_;
  record_.initial_indices = labeled_.indices();
  record_.initial_labels = labeled_.labels();
  if (!labeled_.empty()) {
    refit();
    record_.initial_accuracy = current_accuracy();
  }
}

bool ActiveLearner::done() const {
  return !has_pending() && (static_cast<int>(record_.iterations.size()) >= cfg_.iterations ||
                            unlabeled_.size() < cfg_.batch_size);
}

std::optional<double> ActiveLearner::latest_accuracy() const {
  if (!record_.iterations.empty()) return record_.iterations.back().accuracy;
  return record_.initial_accuracy;
}

void ActiveLearner::refit() {
  model_ = fit_model(LossModel{cfg_.model, cfg_.gamma}, spectral_, labeled_, cfg_.newton);
}

std::optional<double> ActiveLearner::current_accuracy() const {
  if (!data_->ground_truth || !model_ || unlabeled_.empty()) return std::nullopt;
  return accuracy(*model_, *data_, unlabeled_);
}

const std::vector<PendingQuery>& ActiveLearner::propose() {
  if (has_pending()) return pending_;
  if (done()) throw std::logic_error("the session is finished");
  const auto start = std::chrono::steady_clock::now();
  const std::size_t b = cfg_.batch_size;
  IterationRecord rec;
  rec.iter = static_cast<int>(record_.iterations.size()) + 1;
  last_evaluations_ = 0;

  if (cfg_.acquisition == AcqMethod::rand || !model_) {
    const double frac = static_cast<double>(b) / static_cast<double>(unlabeled_.size());
    rec.chosen = sample_candidates(unlabeled_, frac, rng_, b);
    rec.chosen.resize(b);
    rec.candidate_count = unlabeled_.size();
    for (Index k : rec.chosen) {
      rec.scores.push_back(0.0);
      rec.pseudo_labels.push_back(model_ ? classify(*model_, k) : 0);
    }
  } else {
    const bool full = cfg_.sequential_full_scan && b == 1;
    const std::vector<Index> cands =
        full ? unlabeled_ : sample_candidates(unlabeled_, cfg_.candidate_fraction, rng_, b);
    const Scorer scorer(*model_);
    const AcquisitionScores scores = score_candidates(scorer, cfg_.acquisition, cands, cfg_.threads);
    last_evaluations_ = scorer.evaluations();
    rec.candidate_count = cands.size();
    rec.chosen = select_query_set(scores, b);
    std::map<Index, const CandidateScore*> lookup;
    for (const auto& e : scores.entries) lookup[e.index] = &e;
    for (Index k : rec.chosen) {
      rec.scores.push_back(lookup.at(k)->score);
      rec.pseudo_labels.push_back(lookup.at(k)->pseudo_label);
    }
  }
  rec.acq_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  for (std::size_t i = 0; i < rec.chosen.size(); ++i)
    pending_.push_back({rec.chosen[i], rec.pseudo_labels[i], rec.scores[i]});
  pending_record_ = std::move(rec);
  return pending_;
}

void ActiveLearner::submit(const std::vector<std::pair<Index, Label>>& labels) {
  using Code = SubmissionError::Code;
  if (!has_pending()) throw SubmissionError(Code::no_pending, "no query batch is pending");
  std::map<Index, Label> given;
  for (const auto& [idx, lab] : labels) {
    const bool is_pending = std::any_of(pending_.begin(), pending_.end(),
                                        [idx = idx](const PendingQuery& q) { return q.index == idx; });
    if (!is_pending)
      throw SubmissionError(Code::not_pending, "node " + std::to_string(idx) + " is not in the pending batch");
    if (!given.emplace(idx, lab).second)
      throw SubmissionError(Code::duplicate, "node " + std::to_string(idx) + " was labeled twice");
    if (!label_in_alphabet(lab, data_->n_classes, data_->binary))
      throw SubmissionError(Code::bad_label, "label " + std::to_string(lab) + " is outside the label alphabet");
  }
  if (given.size() != pending_.size())
    throw SubmissionError(Code::partial, "expected " + std::to_string(pending_.size()) + " labels, got " +
                                             std::to_string(given.size()));

  IterationRecord rec = std::move(pending_record_);
  for (Index k : rec.chosen) {
    const Label y = given.at(k);
    labeled_.add(k, y);
    rec.oracle_labels.push_back(y);
  }
  std::vector<Index> rest;
  rest.reserve(unlabeled_.size());
  for (Index k : unlabeled_)
    if (!labeled_.contains(k)) rest.push_back(k);
  unlabeled_ = std::move(rest);
  pending_.clear();
  refit();
  rec.num_labeled = labeled_.size();
  rec.accuracy = current_accuracy();
  record_.iterations.push_back(std::move(rec));
}

RunRecord run_active_learning(const LoopConfig& cfg, std::shared_ptr<const Dataset> data,
                              std::shared_ptr<const SpectralDecomposition> spectral) {
  if (!data->ground_truth) throw std::invalid_argument("the ground-truth oracle needs labels");
  ActiveLearner learner(cfg, data, std::move(spectral));
  while (!learner.done()) {
    std::vector<std::pair<Index, Label>> answers;
    for (const PendingQuery& q : learner.propose())
      answers.emplace_back(q.index, (*data->ground_truth)[static_cast<std::size_t>(q.index)]);
    learner.submit(answers);
  }
  return learner.record();
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_run_record(const RunRecord& record, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream acc(dir / "accuracy.csv");
  std::ofstream choices(dir / "choices.csv");
  if (!acc || !choices) throw std::runtime_error("cannot write run record to " + dir.string());
  acc << "iter,num_labeled,accuracy,acq_seconds\n";
  choices << "iter,node_index,pseudo_label,oracle_label,score\n";
  for (const auto& it : record.iterations) {
    acc << it.iter << ',' << it.num_labeled << ',' << (it.accuracy ? fmt(*it.accuracy) : "") << ','
        << fmt(it.acq_seconds) << '\n';
    for (std::size_t i = 0; i < it.chosen.size(); ++i)
      choices << it.iter << ',' << it.chosen[i] << ',' << it.pseudo_labels[i] << ','
              << it.oracle_labels[i] << ',' << fmt(it.scores[i]) << '\n';
  }
}

}  // namespace mcal
