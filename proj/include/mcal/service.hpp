#pragma once

#include <memory>
#include <mutex>
#include <string>

#include <json.hpp>

#include "mcal/loop.hpp"

namespace mcal {

enum class SessionPhase { fitting, awaiting_labels, done };
std::string_view phase_name(SessionPhase p);

struct HttpResult {
  int status = 200;
  std::string body;
};

// JSON views of a run record and a session, shared by the service and the CLI.
nlohmann::json run_record_json(const RunRecord& record);

// Single-session labeling service. Loop advancement is serialized behind `advance_mu_`;
// readers copy an immutable snapshot under a separate pointer lock and never wait for a
// refit to finish.
class SessionService {
 public:
  SessionService(const LoopConfig& cfg, std::shared_ptr<const Dataset> data,
                 std::shared_ptr<const SpectralDecomposition> spectral, std::string session_id = "0");

  HttpResult get_session() const;
  HttpResult get_query() const;
  // Body {"labels":[{"index":i,"label":y},...]} with an optional "batch" id from the query.
  HttpResult post_labels(const std::string& body);
  HttpResult get_record() const;

 private:
  struct Snapshot {
    nlohmann::json session;
    nlohmann::json query;
    nlohmann::json record;
  };
  std::shared_ptr<const Snapshot> snapshot() const;
  void publish(SessionPhase phase);

  std::string id_;
  std::mutex advance_mu_;
  ActiveLearner learner_;
  mutable std::mutex snap_mu_;
  std::shared_ptr<const Snapshot> snap_;
};

// Routes GET /session, GET /session/query, POST /session/labels and GET /session/record.
class HttpFrontend {
 public:
  explicit HttpFrontend(SessionService& service);
  ~HttpFrontend();
  HttpFrontend(const HttpFrontend&) = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  // Port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Blocks until stop() is called.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Binds and blocks until the server stops.
void serve(SessionService& service, const std::string& host, int port);

}  // namespace mcal
