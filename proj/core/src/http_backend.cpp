#include "logistory/http_backend.hpp"

#include <httplib.h>

#include <algorithm>

#include "logistory/hashing.hpp"

namespace logistory {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw BackendError(BackendErrorKind::not_configured, "endpoint without scheme: " + url);
  const std::size_t path = url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, path);
  if (path != std::string::npos) out.prefix = url.substr(path);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

BackendError status_error(int status, const std::string& body) {
  std::string snippet = body.substr(0, 300);
  const std::string msg = "provider returned HTTP " + std::to_string(status) + (snippet.empty() ? "" : ": " + snippet);
  if (status == 429) return BackendError(BackendErrorKind::rate_limited, msg, status);
  if (status >= 500) return BackendError(BackendErrorKind::server, msg, status);
  if (status == 401 || status == 403) return BackendError(BackendErrorKind::auth, msg, status);
  return BackendError(BackendErrorKind::bad_request, msg, status);
}

std::string data_url(const ImageRef& img) {
  const std::string type = img.media_type.empty() ? media_type_for(img.path) : img.media_type;
  return "data:" + type + ";base64," + base64_encode(read_file_bytes(img.path));
}

json parse_body(const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw BackendError(BackendErrorKind::bad_request, std::string("provider reply is not JSON: ") + e.what());
  }
}

std::string image_from_reply(const json& reply) {
  try {
    return base64_decode(reply.at("data").at(0).at("b64_json").get<std::string>());
  } catch (const json::exception& e) {
    throw BackendError(BackendErrorKind::bad_request, std::string("unexpected image reply: ") + e.what());
  }
}

}  // namespace

struct HttpBackend::Route {
  HttpEndpoint endpoint;
  SplitUrl url;
  std::unique_ptr<RateLimiter> limiter;

  httplib::Client client() const {
    httplib::Client cli(url.origin);
    const auto sec = endpoint.timeout_ms / 1000;
    const auto usec = (endpoint.timeout_ms % 1000) * 1000;
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    if (!endpoint.api_key.empty()) cli.set_bearer_token_auth(endpoint.api_key);
    return cli;
  }

  json check(const httplib::Result& res) const {
    if (!res) throw BackendError(BackendErrorKind::transport, "transport error: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300) throw status_error(res->status, res->body);
    return parse_body(res->body);
  }

  json post_json(const std::string& path, const json& body) {
    if (limiter) limiter->acquire();
    auto cli = client();
    return check(cli.Post(url.prefix + path, body.dump(), "application/json"));
  }

  json post_multipart(const std::string& path, const httplib::MultipartFormDataItems& items) {
    if (limiter) limiter->acquire();
    auto cli = client();
    return check(cli.Post(url.prefix + path, items));
  }
};

HttpBackend::HttpBackend(std::map<Capability, HttpEndpoint> endpoints, RateLimiter::Clock clock, Sleeper sleeper) {
  for (auto& [cap, ep] : endpoints) {
    auto route = std::make_unique<Route>();
    route->url = split_url(ep.base_url);
    if (ep.rate_limit_requests > 0) {
      route->limiter = std::make_unique<RateLimiter>(ep.rate_limit_requests,
                                                     std::chrono::milliseconds(ep.rate_limit_window_ms), clock, sleeper);
    }
    route->endpoint = std::move(ep);
    routes_[cap] = std::move(route);
  }
}

HttpBackend::~HttpBackend() = default;

bool HttpBackend::supports(Capability c) const { return routes_.count(c) != 0; }

BackendResponse HttpBackend::call(const BackendRequest& req) {
  auto it = routes_.find(req.capability);
  if (it == routes_.end()) {
    throw BackendError(BackendErrorKind::not_configured,
                       "no HTTP endpoint for capability " + std::string(to_string(req.capability)));
  }
  Route& route = *it->second;
  BackendResponse out;
  out.capability = req.capability;

  switch (req.capability) {
    case Capability::chat:
    case Capability::caption:
    case Capability::vqa: {
      json messages = json::array();
      if (req.payload.contains("system")) {
        messages.push_back({{"role", "system"}, {"content", req.payload.at("system")}});
      }
      const std::string prompt = req.payload.value("prompt", std::string());
      if (req.images.empty()) {
        messages.push_back({{"role", "user"}, {"content", prompt}});
      } else {
        json content = json::array({{{"type", "text"}, {"text", prompt}}});
        for (const auto& img : req.images) {
          content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url(img)}}}});
        }
        messages.push_back({{"role", "user"}, {"content", content}});
      }
      json body = {{"model", req.model_id}, {"messages", messages}};
      if (req.payload.contains("temperature")) body["temperature"] = req.payload.at("temperature");
      const json reply = route.post_json("/chat/completions", body);
      try {
        out.text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const json::exception& e) {
        throw BackendError(BackendErrorKind::bad_request, std::string("unexpected chat reply: ") + e.what());
      }
      if (reply.contains("usage")) out.provider_meta["usage"] = reply.at("usage");
      break;
    }
    case Capability::generate_image: {
      std::string prompt = req.payload.value("prompt", std::string());
      if (req.payload.contains("negative_prompt")) {
        prompt += "\nAvoid: " + req.payload.at("negative_prompt").get<std::string>();
      }
      json body = {{"model", req.model_id}, {"prompt", prompt}, {"n", 1}, {"response_format", "b64_json"}};
      if (req.payload.contains("size")) body["size"] = req.payload.at("size");
      out.image_bytes = image_from_reply(route.post_json("/images/generations", body));
      out.media_type = "image/png";
      break;
    }
    case Capability::edit_image: {
      if (req.images.empty()) throw BackendError(BackendErrorKind::bad_request, "edit_image needs a source image");
      const ImageRef& src = req.images.front();
      httplib::MultipartFormDataItems items = {
          {"model", req.model_id, "", ""},
          {"prompt", req.payload.value("instruction", std::string()), "", ""},
          {"response_format", "b64_json", "", ""},
          {"image", read_file_bytes(src.path), src.path.filename().string(),
           src.media_type.empty() ? media_type_for(src.path) : src.media_type},
      };
      out.image_bytes = image_from_reply(route.post_multipart("/images/edits", items));
      out.media_type = "image/png";
      break;
    }
    case Capability::embed: {
      json inputs = json::array();
      if (!req.images.empty()) {
        for (const auto& img : req.images) inputs.push_back(data_url(img));
      } else {
        inputs = req.payload.at("inputs");
      }
      const json reply = route.post_json("/embeddings", {{"model", req.model_id}, {"input", inputs}});
      try {
        std::vector<std::pair<int, std::vector<double>>> rows;
        int fallback = 0;
        for (const auto& d : reply.at("data")) {
          rows.push_back({d.value("index", fallback++), d.at("embedding").get<std::vector<double>>()});
        }
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (auto& r : rows) out.embeddings.push_back(std::move(r.second));
      } catch (const json::exception& e) {
        throw BackendError(BackendErrorKind::bad_request, std::string("unexpected embeddings reply: ") + e.what());
      }
      break;
    }
  }
  out.provider_meta["backend"] = "http";
  return out;
}

}  // namespace logistory
