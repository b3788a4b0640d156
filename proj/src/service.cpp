#include "mcal/service.hpp"

#include <stdexcept>

// After Eigen: <resolv.h> defines a _res macro that clashes with Eigen internals.
#include <httplib.h>

namespace mcal {

struct HttpFrontend::Impl {
  httplib::Server server;
};

HttpFrontend::HttpFrontend(SessionService& service) : impl_(std::make_unique<Impl>()) {
  httplib::Server& server = impl_->server;
  SessionService* svc = &service;
  auto reply = [](httplib::Response& res, const HttpResult& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server.Get("/session", [svc, reply](const httplib::Request&, httplib::Response& res) { reply(res, svc->get_session()); });
  server.Get("/session/query",
             [svc, reply](const httplib::Request&, httplib::Response& res) { reply(res, svc->get_query()); });
  server.Get("/session/record",
             [svc, reply](const httplib::Request&, httplib::Response& res) { reply(res, svc->get_record()); });
  server.Post("/session/labels", [svc, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc->post_labels(req.body));
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string msg = "internal error";
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      msg = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(nlohmann::json{{"error", {{"code", "internal"}, {"message", msg}}}}.dump(), "application/json");
  });
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

HttpFrontend::~HttpFrontend() = default;

int HttpFrontend::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpFrontend::listen() {
  if (!impl_->server.listen_after_bind()) throw std::runtime_error("server stopped with an error");
}

void HttpFrontend::stop() { impl_->server.stop(); }

void serve(SessionService& service, const std::string& host, int port) {
  HttpFrontend front(service);
  front.bind(host, port);
  front.listen();
}

}  // namespace mcal
