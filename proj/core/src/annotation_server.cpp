#include <httplib.h>

#include <atomic>
#include <thread>

#include "logistory/annotation.hpp"

namespace logistory {

struct AnnotationServer::Impl {
  AnnotationService& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(AnnotationService& s) : service(s) {}
};

namespace {

void reply(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  if (!r.media_type.empty()) {
    res.set_content(r.bytes, r.media_type);
  } else {
    res.set_content(r.body.dump(), "application/json");
  }
}

std::optional<std::string> param(const httplib::Request& req, const char* name) {
  if (!req.has_param(name)) return std::nullopt;
  return req.get_param_value(name);
}

}  // namespace

AnnotationServer::AnnotationServer(AnnotationService& service) : impl_(std::make_unique<Impl>(service)) {
  auto& srv = impl_->server;
  AnnotationService& svc = impl_->service;

  srv.set_pre_routing_handler([&svc](const httplib::Request& req, httplib::Response& res) {
    if (svc.authorized(req.get_header_value("Authorization"))) return httplib::Server::HandlerResponse::Unhandled;
    reply(res, {401, {{"error", "unauthorized"}}, {}, {}});
    return httplib::Server::HandlerResponse::Handled;
  });

  srv.Get("/api/tasks", [&svc](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::size_t> limit;
    if (auto l = param(req, "limit")) {
      try {
        const long v = std::stol(*l);
        if (v < 1) throw std::invalid_argument("limit");
        limit = static_cast<std::size_t>(v);
      } catch (const std::exception&) {
        reply(res, {422, {{"errors", json::array({{{"field", "limit"}, {"message", "positive integer"}}})}}, {}, {}});
        return;
      }
    }
    reply(res, svc.tasks(param(req, "annotator").value_or(""), param(req, "dimension"), limit));
  });

  srv.Get(R"(/api/task/([^/]+)/image/(\d+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    int n = 0;
    try {
      n = std::stoi(req.matches[2].str());
    } catch (const std::exception&) {
      reply(res, {404, {{"error", "no such image"}}, {}, {}});
      return;
    }
    reply(res, svc.image(req.matches[1].str(), n));
  });

  srv.Post("/api/ratings", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.submit(req.body));
  });

  srv.Get("/api/progress", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.progress(param(req, "annotator").value_or("")));
  });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(json{{"error", "not found"}}.dump(), "application/json");
  });

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    }
    res.status = 500;
    res.set_content(json{{"error", what}}.dump(), "application/json");
  });
}

AnnotationServer::~AnnotationServer() { stop(); }

int AnnotationServer::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = srv.bind_to_any_port(host);
  } else if (!srv.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void AnnotationServer::listen(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

void AnnotationServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace logistory
