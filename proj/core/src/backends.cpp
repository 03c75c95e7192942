#include "logistory/backends.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "logistory/hashing.hpp"
#include "logistory/text.hpp"

namespace logistory {

namespace {

constexpr std::pair<Capability, std::string_view> kCapabilityNames[] = {
    {Capability::chat, "chat"},       {Capability::generate_image, "generate_image"},
    {Capability::edit_image, "edit_image"}, {Capability::caption, "caption"},
    {Capability::embed, "embed"},     {Capability::vqa, "vqa"},
};

constexpr std::pair<BackendErrorKind, std::string_view> kErrorNames[] = {
    {BackendErrorKind::transport, "transport"},   {BackendErrorKind::rate_limited, "rate_limited"},
    {BackendErrorKind::server, "server"},         {BackendErrorKind::auth, "auth"},
    {BackendErrorKind::bad_request, "bad_request"}, {BackendErrorKind::not_configured, "not_configured"},
    {BackendErrorKind::no_fixture, "no_fixture"},
};

BackendErrorKind parse_error_kind(std::string_view s) {
  for (const auto& [k, name] : kErrorNames) {
    if (name == s) return k;
  }
  throw DomainError("unknown backend error kind '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(Capability c) {
  for (const auto& [k, name] : kCapabilityNames) {
    if (k == c) return name;
  }
  return "unknown";
}

Capability parse_capability(std::string_view s) {
  const std::string n = text::normalize(s);
  for (const auto& [k, name] : kCapabilityNames) {
    if (name == n) return k;
  }
  throw DomainError("unknown capability '" + std::string(s) + "'");
}

std::string_view to_string(BackendErrorKind k) {
  for (const auto& [kind, name] : kErrorNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string media_type_for(const std::filesystem::path& path) {
  const std::string ext = text::to_lower(path.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  if (ext == ".ppm") return "image/x-portable-pixmap";
  return "application/octet-stream";
}

std::string extension_for(std::string_view media_type) {
  if (media_type == "image/png") return "png";
  if (media_type == "image/jpeg") return "jpg";
  if (media_type == "image/webp") return "webp";
  if (media_type == "image/x-portable-pixmap") return "ppm";
  return "bin";
}

std::string BackendRequest::fingerprint() const {
  json images_j = json::array();
  for (const auto& img : images) {
    std::string bytes;
    try {
      bytes = read_file_bytes(img.path);
    } catch (const Error& e) {
      throw BackendError(BackendErrorKind::bad_request, e.what());
    }
    images_j.push_back(sha256_hex(bytes));
  }
  const json doc = {{"capability", to_string(capability)},
                    {"model_id", model_id},
                    {"payload", payload},
                    {"images", images_j}};
  return sha256_hex(doc.dump());
}

// ---------------------------------------------------------------------------

double RetryPolicy::backoff_ms(int failed_attempts) const {
  if (failed_attempts <= 0) return 0.0;
  return base_backoff_ms * std::pow(backoff_multiplier, failed_attempts - 1);
}

void to_json(json& j, const RetryPolicy& p) {
  json kinds = json::array();
  for (auto k : p.retryable) kinds.push_back(to_string(k));
  j = json{{"max_attempts", p.max_attempts},
           {"base_backoff_ms", p.base_backoff_ms},
           {"backoff_multiplier", p.backoff_multiplier},
           {"retryable", kinds}};
}

void from_json(const json& j, RetryPolicy& p) {
  p.max_attempts = j.value("max_attempts", p.max_attempts);
  p.base_backoff_ms = j.value("base_backoff_ms", p.base_backoff_ms);
  p.backoff_multiplier = j.value("backoff_multiplier", p.backoff_multiplier);
  if (j.contains("retryable")) {
    p.retryable.clear();
    for (const auto& k : j.at("retryable")) p.retryable.insert(parse_error_kind(k.get<std::string>()));
  }
  if (p.max_attempts < 1) throw DomainError("retry.max_attempts must be >= 1");
  if (p.base_backoff_ms < 0 || p.backoff_multiplier < 1.0) {
    throw DomainError("retry backoff must be non-negative with multiplier >= 1");
  }
}

void to_json(json& j, const AttemptRecord& a) {
  j = json{{"attempt", a.attempt},   {"capability", to_string(a.capability)},
           {"model_id", a.model_id}, {"fingerprint", a.fingerprint},
           {"ok", a.ok},             {"latency_ms", a.latency_ms}};
  if (!a.ok) {
    j["error_kind"] = a.error_kind;
    j["error"] = a.error;
    if (a.status != 0) j["status"] = a.status;
  }
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

BackendResponse invoke(Backend& backend, const BackendRequest& req, const RetryPolicy& policy,
                       const AttemptSink& sink, const Sleeper& sleeper) {
  if (!backend.supports(req.capability)) {
    throw BackendError(BackendErrorKind::not_configured,
                       "backend does not support capability " + std::string(to_string(req.capability)));
  }
  const std::string fp = req.fingerprint();
  for (int attempt = 1;; ++attempt) {
    AttemptRecord rec;
    rec.attempt = attempt;
    rec.capability = req.capability;
    rec.model_id = req.model_id;
    rec.fingerprint = fp;
    const auto start = std::chrono::steady_clock::now();
    try {
      BackendResponse resp = backend.call(req);
      rec.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      if (resp.capability != req.capability) {
        throw BackendError(BackendErrorKind::bad_request,
                           "backend answered " + std::string(to_string(resp.capability)) + " to a " +
                               std::string(to_string(req.capability)) + " request");
      }
      rec.ok = true;
      resp.latency_ms = rec.latency_ms;
      if (sink) sink(rec);
      return resp;
    } catch (const BackendError& e) {
      rec.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      rec.error_kind = to_string(e.kind());
      rec.error = e.what();
      rec.status = e.status();
      if (sink) sink(rec);
      const bool retry = policy.retryable.count(e.kind()) != 0 && attempt < policy.max_attempts;
      if (!retry) throw;
      if (sleeper) {
        sleeper(std::chrono::milliseconds(static_cast<long long>(policy.backoff_ms(attempt))));
      }
    }
  }
}

namespace {

std::vector<std::vector<double>> check_embeddings(const BackendResponse& resp, std::size_t expected) {
  if (resp.embeddings.size() != expected) {
    throw BackendError(BackendErrorKind::bad_request, "embedder returned " + std::to_string(resp.embeddings.size()) +
                                                          " vectors for " + std::to_string(expected) + " inputs");
  }
  for (const auto& v : resp.embeddings) {
    if (v.size() != resp.embeddings.front().size()) {
      throw BackendError(BackendErrorKind::bad_request, "embedder returned mixed dimensionality (" +
                                                            std::to_string(resp.embeddings.front().size()) + " vs " +
                                                            std::to_string(v.size()) + ")");
    }
    if (v.empty()) throw BackendError(BackendErrorKind::bad_request, "embedder returned an empty vector");
  }
  return resp.embeddings;
}

}  // namespace

std::vector<std::vector<double>> embed_batch(Backend& backend, const std::vector<std::string>& texts,
                                             const std::string& model_id, const RetryPolicy& policy,
                                             const AttemptSink& sink) {
  if (texts.empty()) throw DomainError("embed_batch: empty input list");
  BackendRequest req;
  req.capability = Capability::embed;
  req.model_id = model_id;
  req.payload = {{"inputs", texts}};
  return check_embeddings(invoke(backend, req, policy, sink), texts.size());
}

std::vector<std::vector<double>> embed_batch(Backend& backend, const std::vector<ImageRef>& images,
                                             const std::string& model_id, const RetryPolicy& policy,
                                             const AttemptSink& sink) {
  if (images.empty()) throw DomainError("embed_batch: empty input list");
  BackendRequest req;
  req.capability = Capability::embed;
  req.model_id = model_id;
  req.payload = {{"input_kind", "image"}};
  req.images = images;
  return check_embeddings(invoke(backend, req, policy, sink), images.size());
}

// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(int max_requests, std::chrono::milliseconds window, Clock clock, Sleeper sleeper)
    : max_requests_(max_requests), window_(window), clock_(std::move(clock)), sleeper_(std::move(sleeper)) {
  if (max_requests_ < 1) throw DomainError("rate limit must allow at least one request");
  if (!clock_) clock_ = [] { return std::chrono::steady_clock::now(); };
  if (!sleeper_) sleeper_ = real_sleeper();
}

void RateLimiter::acquire() {
  std::lock_guard<std::mutex> lock(mu_);
  for (;;) {
    const auto now = clock_();
    while (!recent_.empty() && now - recent_.front() >= window_) recent_.pop_front();
    if (static_cast<int>(recent_.size()) < max_requests_) {
      recent_.push_back(now);
      return;
    }
    const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(recent_.front() + window_ - now);
    sleeper_(std::max(wait, std::chrono::milliseconds(1)));
  }
}

// ---------------------------------------------------------------------------

void BackendRegistry::set(const std::string& role, ModelSlot slot) { slots_[role] = std::move(slot); }

bool BackendRegistry::has(const std::string& role) const { return slots_.count(role) != 0; }

const ModelSlot* BackendRegistry::find(const std::string& role) const {
  auto it = slots_.find(role);
  return it == slots_.end() ? nullptr : &it->second;
}

const ModelSlot& BackendRegistry::require(const std::string& role, Capability capability) const {
  const ModelSlot* slot = find(role);
  if (!slot || !slot->backend) {
    throw BackendError(BackendErrorKind::not_configured, "no backend configured for role '" + role +
                                                             "' (capability " + std::string(to_string(capability)) +
                                                             ")");
  }
  if (!slot->backend->supports(capability)) {
    throw BackendError(BackendErrorKind::not_configured, "backend for role '" + role +
                                                             "' does not provide capability " +
                                                             std::string(to_string(capability)));
  }
  return *slot;
}

std::vector<std::string> BackendRegistry::roles() const {
  std::vector<std::string> out;
  for (const auto& [r, _] : slots_) out.push_back(r);
  return out;
}

void BackendRegistry::add_alternative(const std::string& role, const std::string& name, ModelSlot slot) {
  alternatives_[role][name] = std::move(slot);
}

const ModelSlot* BackendRegistry::alternative(const std::string& role, const std::string& name) const {
  auto it = alternatives_.find(role);
  if (it == alternatives_.end()) return nullptr;
  auto jt = it->second.find(name);
  return jt == it->second.end() ? nullptr : &jt->second;
}

BackendResponse BackendRegistry::call(const std::string& role, BackendRequest req, const AttemptSink& sink,
                                      const Sleeper& sleeper) const {
  const ModelSlot& slot = require(role, req.capability);
  req.model_id = slot.model_id;
  return invoke(*slot.backend, req, slot.retry, sink, sleeper);
}

}  // namespace logistory
