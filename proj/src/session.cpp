#include <stdexcept>

#include "mcal/service.hpp"

namespace mcal {

using nlohmann::json;

std::string_view phase_name(SessionPhase p) {
  switch (p) {
    case SessionPhase::fitting: return "fitting";
    case SessionPhase::awaiting_labels: return "awaiting_labels";
    case SessionPhase::done: return "done";
  }
  return "?";
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json error_body(const std::string& code, const std::string& message) {
  return {{"error", {{"code", code}, {"message", message}}}};
}

std::string submission_code(SubmissionError::Code c) {
  switch (c) {
    case SubmissionError::Code::not_pending: return "not_pending";
    case SubmissionError::Code::partial: return "partial_batch";
    case SubmissionError::Code::duplicate: return "duplicate_label";
    case SubmissionError::Code::no_pending: return "no_pending_batch";
    case SubmissionError::Code::bad_label: return "bad_label";
  }
  return "rejected";
}

}  // namespace

json run_record_json(const RunRecord& record) {
  const LoopConfig& c = record.config;
  json iters = json::array();
  for (const auto& it : record.iterations)
    iters.push_back({{"iter", it.iter},
                     {"num_labeled", it.num_labeled},
                     {"chosen", it.chosen},
                     {"pseudo_labels", it.pseudo_labels},
                     {"oracle_labels", it.oracle_labels},
                     {"scores", it.scores},
                     {"accuracy", optional_number(it.accuracy)},
                     {"acq_seconds", it.acq_seconds},
                     {"candidate_count", it.candidate_count}});
  return {{"config",
           {{"model", std::string(family_name(c.model))},
            {"acquisition", std::string(acq_name(c.acquisition))},
            {"gamma", c.gamma},
            {"batch_size", c.batch_size},
            {"iterations", c.iterations},
            {"candidate_fraction", c.candidate_fraction},
            {"sequential_full_scan", c.sequential_full_scan},
            {"initial_per_class", c.initial_per_class},
            {"seed", c.seed},
            {"newton_tol", c.newton.tol},
            {"newton_max_iter", c.newton.max_iter},
            {"uncertainty", "least margin"}}},
          {"initial",
           {{"indices", record.initial_indices},
            {"labels", record.initial_labels},
            {"accuracy", optional_number(record.initial_accuracy)}}},
          {"iterations", iters}};
}

SessionService::SessionService(const LoopConfig& cfg, std::shared_ptr<const Dataset> data,
                               std::shared_ptr<const SpectralDecomposition> spectral, std::string session_id)
    : id_(std::move(session_id)), learner_(cfg, std::move(data), std::move(spectral)) {
  if (!learner_.done()) learner_.propose();
  publish(learner_.has_pending() ? SessionPhase::awaiting_labels : SessionPhase::done);
}

std::shared_ptr<const SessionService::Snapshot> SessionService::snapshot() const {
  std::lock_guard<std::mutex> lock(snap_mu_);
  return snap_;
}

void SessionService::publish(SessionPhase phase) {
  auto s = std::make_shared<Snapshot>();
  const Dataset& data = learner_.data();
  json alphabet = json::array();
  if (data.binary) alphabet = {1, -1};
  else
    for (int c = 1; c <= data.n_classes; ++c) alphabet.push_back(c);

  const int batch = static_cast<int>(learner_.record().iterations.size()) + 1;
  json queries = json::array();
  json pending = json::array();
  if (phase == SessionPhase::awaiting_labels) {
    for (const PendingQuery& q : learner_.pending()) {
      json coords = nullptr;
      if (data.dim() >= 2) coords = {data.features(q.index, 0), data.features(q.index, 1)};
      queries.push_back({{"index", q.index}, {"pseudo_label", q.pseudo_label}, {"coords", coords}, {"score", q.score}});
      pending.push_back(q.index);
    }
  }
  s->session = {{"session_id", id_},
                {"phase", std::string(phase_name(phase))},
                {"batch", phase == SessionPhase::awaiting_labels ? json(batch) : json(nullptr)},
                {"pending", pending},
                {"labeled_count", learner_.labeled().size()},
                {"unlabeled_count", learner_.unlabeled().size()},
                {"iterations_done", learner_.record().iterations.size()},
                {"iterations_total", learner_.config().iterations},
                {"accuracy", optional_number(learner_.latest_accuracy())},
                {"label_alphabet", alphabet},
                {"model", std::string(family_name(learner_.config().model))},
                {"acquisition", std::string(acq_name(learner_.config().acquisition))}};
  s->query = {{"batch", phase == SessionPhase::awaiting_labels ? json(batch) : json(nullptr)}, {"queries", queries}};
  s->record = run_record_json(learner_.record());
  std::lock_guard<std::mutex> lock(snap_mu_);
  snap_ = std::move(s);
}

HttpResult SessionService::get_session() const { return {200, snapshot()->session.dump()}; }

HttpResult SessionService::get_query() const { return {200, snapshot()->query.dump()}; }

HttpResult SessionService::get_record() const { return {200, snapshot()->record.dump()}; }

HttpResult SessionService::post_labels(const std::string& body) {
  std::vector<std::pair<Index, Label>> labels;
  std::optional<long long> batch;
  try {
    const json doc = json::parse(body);
    if (!doc.is_object() || !doc.contains("labels") || !doc["labels"].is_array())
      return {400, error_body("malformed", "body must be an object with a 'labels' array").dump()};
    for (const json& item : doc["labels"]) {
      if (!item.is_object() || !item.contains("index") || !item.contains("label") ||
          !item["index"].is_number_integer() || !item["label"].is_number_integer())
        return {400, error_body("malformed", "each label needs integer 'index' and 'label'").dump()};
      labels.emplace_back(item["index"].get<Index>(), item["label"].get<Label>());
    }
    if (doc.contains("batch") && !doc["batch"].is_null()) {
      if (!doc["batch"].is_number_integer())
        return {400, error_body("malformed", "'batch' must be an integer").dump()};
      batch = doc["batch"].get<long long>();
    }
  } catch (const json::exception& e) {
    return {400, error_body("malformed", std::string("invalid JSON: ") + e.what()).dump()};
  }

  std::lock_guard<std::mutex> lock(advance_mu_);
  const long long current = static_cast<long long>(learner_.record().iterations.size()) + 1;
  if (batch && (*batch != current || !learner_.has_pending()))
    return {409, error_body("stale_batch", "batch " + std::to_string(*batch) + " is not the pending batch").dump()};

  const auto previous = snapshot();
  try {
    if (learner_.has_pending()) publish(SessionPhase::fitting);
    learner_.submit(labels);
  } catch (const SubmissionError& e) {
    {
      std::lock_guard<std::mutex> snap_lock(snap_mu_);
      snap_ = previous;
    }
    const int status = e.code() == SubmissionError::Code::bad_label ? 400 : 409;
    return {status, error_body(submission_code(e.code()), e.what()).dump()};
  }
  if (!learner_.done()) learner_.propose();
  publish(learner_.has_pending() ? SessionPhase::awaiting_labels : SessionPhase::done);
  return {200, snapshot()->session.dump()};
}

}  // namespace mcal
