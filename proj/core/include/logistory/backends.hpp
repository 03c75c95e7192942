#pragma once

#include <chrono>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "logistory/domain.hpp"

namespace logistory {

enum class Capability { chat, generate_image, edit_image, caption, embed, vqa };

std::string_view to_string(Capability c);
Capability parse_capability(std::string_view s);  // throws DomainError

// Images travel by file path inside the engine. Only the HTTP layer reads
// the bytes and inlines them.
struct ImageRef {
  std::filesystem::path path;
  std::string media_type;
};

// Payload conventions per capability:
//   chat            {"prompt", "system"?, "template"?}
//   caption, vqa    {"prompt", "template"?} + images
//   generate_image  {"prompt", "negative_prompt"?, "template"?}
//   edit_image      {"instruction"} + images[0]
//   embed           {"inputs": [text...]} or images
struct BackendRequest {
  Capability capability = Capability::chat;
  std::string model_id;
  json payload = json::object();
  std::vector<ImageRef> images;

  // SHA-256 over capability, model id, payload and the content hash of each
  // image. Paths do not participate, so moving a run directory keeps
  // fingerprints stable. Throws BackendError if an image cannot be read.
  std::string fingerprint() const;
};

struct BackendResponse {
  Capability capability = Capability::chat;
  std::string text;
  std::string image_bytes;
  std::string media_type;
  std::vector<std::vector<double>> embeddings;
  double latency_ms = 0.0;
  json provider_meta = json::object();
};

enum class BackendErrorKind {
  transport,       // connection failures, timeouts
  rate_limited,    // HTTP 429
  server,          // HTTP 5xx
  auth,            // HTTP 401/403
  bad_request,     // HTTP 400/404/422, malformed provider reply
  not_configured,  // no backend for a role or capability
  no_fixture,      // mock lookup miss
};

std::string_view to_string(BackendErrorKind k);

class BackendError : public Error {
 public:
  BackendError(BackendErrorKind kind, std::string message, int status = 0)
      : Error(std::move(message)), kind_(kind), status_(status) {}
  BackendErrorKind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  BackendErrorKind kind_;
  int status_;
};

struct RetryPolicy {
  int max_attempts = 3;
  double base_backoff_ms = 500.0;
  double backoff_multiplier = 2.0;
  std::set<BackendErrorKind> retryable = {BackendErrorKind::transport, BackendErrorKind::rate_limited,
                                          BackendErrorKind::server};

  double backoff_ms(int failed_attempts) const;
};

void to_json(json& j, const RetryPolicy& p);
void from_json(const json& j, RetryPolicy& p);

struct AttemptRecord {
  int attempt = 0;  // 1-based
  Capability capability = Capability::chat;
  std::string model_id;
  std::string fingerprint;
  bool ok = false;
  std::string error_kind;
  std::string error;
  int status = 0;
  double latency_ms = 0.0;
};

void to_json(json& j, const AttemptRecord& a);

using AttemptSink = std::function<void(const AttemptRecord&)>;
using Sleeper = std::function<void(std::chrono::milliseconds)>;

Sleeper real_sleeper();

class Backend {
 public:
  virtual ~Backend() = default;
  virtual bool supports(Capability c) const = 0;
  // One attempt, no retries. Throws BackendError.
  virtual BackendResponse call(const BackendRequest& req) = 0;
};

// Retries `backend.call` per `policy`. Every attempt, failed or not, is
// reported to `sink`. Non-retryable errors and exhaustion rethrow the last
// BackendError.
BackendResponse invoke(Backend& backend, const BackendRequest& req, const RetryPolicy& policy,
                       const AttemptSink& sink = {}, const Sleeper& sleeper = real_sleeper());

// Embeds every input in one request and checks the provider kept a single
// dimensionality. Texts and images must not be mixed.
std::vector<std::vector<double>> embed_batch(Backend& backend, const std::vector<std::string>& texts,
                                             const std::string& model_id, const RetryPolicy& policy,
                                             const AttemptSink& sink = {});
std::vector<std::vector<double>> embed_batch(Backend& backend, const std::vector<ImageRef>& images,
                                             const std::string& model_id, const RetryPolicy& policy,
                                             const AttemptSink& sink = {});

// At most `max_requests` acquisitions in any window of `window` length.
class RateLimiter {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;

  RateLimiter(int max_requests, std::chrono::milliseconds window, Clock clock = {}, Sleeper sleeper = {});

  void acquire();

 private:
  int max_requests_;
  std::chrono::milliseconds window_;
  Clock clock_;
  Sleeper sleeper_;
  std::mutex mu_;
  std::deque<std::chrono::steady_clock::time_point> recent_;
};

// A backend bound to a pipeline role ("planner", "generator", ...).
struct ModelSlot {
  std::shared_ptr<Backend> backend;
  std::string model_id;
  RetryPolicy retry;
};

// Role name -> model. Roles used by the engine:
//   planner, generator, editor, captioner, monitor, verifier   (pipeline)
//   judge, vqa, aesthetic, embedder, image_embedder            (evaluation)
class BackendRegistry {
 public:
  void set(const std::string& role, ModelSlot slot);
  bool has(const std::string& role) const;
  const ModelSlot* find(const std::string& role) const;
  // Throws BackendError(not_configured) naming the role and capability.
  const ModelSlot& require(const std::string& role, Capability capability) const;
  std::vector<std::string> roles() const;

  // Named alternatives for a role (e.g. several editors). The slot set with
  // `set` is the default.
  void add_alternative(const std::string& role, const std::string& name, ModelSlot slot);
  const ModelSlot* alternative(const std::string& role, const std::string& name) const;

  // Fills in model_id and calls invoke() with the slot's retry policy.
  BackendResponse call(const std::string& role, BackendRequest req, const AttemptSink& sink = {},
                       const Sleeper& sleeper = real_sleeper()) const;

 private:
  std::map<std::string, ModelSlot> slots_;
  std::map<std::string, std::map<std::string, ModelSlot>> alternatives_;
};

std::string read_file_bytes(const std::filesystem::path& path);  // throws Error
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);
std::string media_type_for(const std::filesystem::path& path);
std::string extension_for(std::string_view media_type);

}  // namespace logistory
