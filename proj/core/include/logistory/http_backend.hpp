#pragma once

#include <map>
#include <memory>
#include <string>

#include "logistory/backends.hpp"

namespace logistory {

struct HttpEndpoint {
  std::string base_url;  // e.g. "https://api.example.com/v1"
  std::string api_key;   // resolved from the environment by the config loader
  int timeout_ms = 60000;
  int rate_limit_requests = 0;  // 0 disables limiting
  int rate_limit_window_ms = 60000;
};

// OpenAI-compatible client. chat/caption/vqa use /chat/completions (images as
// data URLs), generate_image uses /images/generations, edit_image the
// multipart /images/edits, embed /embeddings.
//
// HTTP status mapping: 429 -> rate_limited, 5xx -> server, 401/403 -> auth,
// other 4xx -> bad_request; connection failures -> transport.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(std::map<Capability, HttpEndpoint> endpoints, RateLimiter::Clock clock = {},
                       Sleeper sleeper = {});
  ~HttpBackend() override;

  bool supports(Capability c) const override;
  BackendResponse call(const BackendRequest& req) override;

 private:
  struct Route;
  std::map<Capability, std::unique_ptr<Route>> routes_;
};

}  // namespace logistory
