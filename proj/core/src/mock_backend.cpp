#include "logistory/mock_backend.hpp"

#include <cmath>

#include "logistory/hashing.hpp"
#include "logistory/text.hpp"

namespace logistory {

namespace {

constexpr std::string_view kPromptTag = "# logistory-prompt: ";

json load_json_file(const std::filesystem::path& p) {
  try {
    return json::parse(read_file_bytes(p));
  } catch (const json::parse_error& e) {
    throw BackendError(BackendErrorKind::bad_request, "invalid fixture " + p.string() + ": " + e.what());
  }
}

bool where_matches(const json& where, const json& payload) {
  for (const auto& [key, expected] : where.items()) {
    if (!payload.is_object() || !payload.contains(key) || payload.at(key) != expected) return false;
  }
  return true;
}

std::vector<double> normalized(std::vector<double> v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

}  // namespace

std::string synthesize_ppm(const std::string& seed, const std::string& prompt) {
  const std::string h = sha256_hex(seed);
  auto byte_at = [&](std::size_t i) { return static_cast<unsigned char>(std::stoi(h.substr(2 * i, 2), nullptr, 16)); };
  std::string one_line = prompt;
  for (char& c : one_line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::string out = "P6\n" + std::string(kPromptTag) + one_line + "\n16 16\n255\n";
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      const std::size_t k = static_cast<std::size_t>((x / 4 + y / 4) % 8);
      out.push_back(static_cast<char>(byte_at(3 * k % 30)));
      out.push_back(static_cast<char>(byte_at((3 * k + 1) % 30)));
      out.push_back(static_cast<char>(byte_at((3 * k + 2) % 30)));
    }
  }
  return out;
}

std::string ppm_prompt(const std::string& bytes) {
  if (bytes.rfind("P6\n", 0) != 0) return {};
  const std::size_t tag = bytes.find(kPromptTag);
  if (tag != 3) return {};
  const std::size_t start = tag + kPromptTag.size();
  const std::size_t end = bytes.find('\n', start);
  if (end == std::string::npos) return {};
  return bytes.substr(start, end - start);
}

MockBackend::MockBackend(std::filesystem::path fixture_dir) : dir_(std::move(fixture_dir)) {
  if (!std::filesystem::is_directory(dir_)) {
    throw BackendError(BackendErrorKind::not_configured, "mock fixture directory not found: " + dir_.string());
  }
  const auto aliases_path = dir_ / "aliases.json";
  if (std::filesystem::exists(aliases_path)) {
    const json doc = load_json_file(aliases_path);
    const json& rules = doc.is_array() ? doc : doc.at("rules");
    for (const auto& r : rules) {
      Alias a;
      if (r.contains("capability")) a.capability = parse_capability(r.at("capability").get<std::string>());
      if (r.contains("where")) a.where = r.at("where");
      if (r.contains("contains")) a.contains = r.at("contains").get<std::vector<std::string>>();
      if (!r.contains("response")) throw BackendError(BackendErrorKind::bad_request, "alias rule without response");
      a.response = r.at("response");
      aliases_.push_back(std::move(a));
    }
  }
  const auto config_path = dir_ / "mock.json";
  if (std::filesystem::exists(config_path)) {
    const json doc = load_json_file(config_path);
    if (doc.contains("embed")) {
      const json& e = doc.at("embed");
      embed_mode_ = e.value("mode", embed_mode_);
      embed_dim_ = e.value("dim", embed_dim_);
      if (e.contains("vocabulary")) vocabulary_ = e.at("vocabulary").get<std::vector<std::string>>();
      if (embed_mode_ != "hashed" && embed_mode_ != "unit_basis") {
        throw BackendError(BackendErrorKind::bad_request, "unknown mock embed mode '" + embed_mode_ + "'");
      }
      if (embed_mode_ == "unit_basis") embed_dim_ = vocabulary_.size();
      if (embed_dim_ == 0) throw BackendError(BackendErrorKind::bad_request, "mock embed dimension is zero");
    }
  }
}

BackendResponse MockBackend::call(const BackendRequest& req) {
  const std::string fp = req.fingerprint();
  const auto direct = dir_ / std::string(to_string(req.capability)) / (fp + ".json");
  if (std::filesystem::exists(direct)) {
    json doc = load_json_file(direct);
    return materialize(req, fp, doc.contains("response") ? doc.at("response") : doc);
  }
  const std::string dumped = req.payload.dump();
  for (const auto& a : aliases_) {
    if (a.capability && *a.capability != req.capability) continue;
    if (!where_matches(a.where, req.payload)) continue;
    bool all = true;
    for (const auto& needle : a.contains) {
      if (dumped.find(needle) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) return materialize(req, fp, a.response);
  }
  throw BackendError(BackendErrorKind::no_fixture, "no fixture for fingerprint " + fp + " (" +
                                                       std::string(to_string(req.capability)) + ")");
}

std::vector<double> MockBackend::embed_text(const std::string& input) const {
  if (embed_mode_ == "unit_basis") {
    for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
      if (vocabulary_[i] == input) {
        std::vector<double> v(vocabulary_.size(), 0.0);
        v[i] = 1.0;
        return v;
      }
    }
    throw BackendError(BackendErrorKind::no_fixture, "unit_basis embedder has no entry for '" + input + "'");
  }
  std::vector<double> v(embed_dim_, 0.0);
  auto words = text::content_words(input);
  if (words.empty()) words.push_back(text::normalize(input));
  for (const auto& w : words) {
    const std::uint64_t h = stable_seed(w);
    v[h % embed_dim_] += (h >> 63) ? -1.0 : 1.0;
  }
  return normalized(std::move(v));
}

std::vector<double> MockBackend::embed_bytes(const std::string& bytes) const {
  std::vector<double> v(embed_dim_, 0.0);
  const std::string prompt = ppm_prompt(bytes);
  if (!prompt.empty()) return embed_text(prompt);
  const std::string h = sha256_hex(bytes);
  for (std::size_t i = 0; i < embed_dim_; ++i) {
    v[i] = static_cast<double>(stable_seed(h + std::to_string(i)) % 1000) / 1000.0 + 0.5;
  }
  return normalized(std::move(v));
}

BackendResponse MockBackend::materialize(const BackendRequest& req, const std::string& fp,
                                         const json& response) const {
  BackendResponse out;
  out.capability = req.capability;
  out.provider_meta = {{"backend", "mock"}, {"fingerprint", fp}};
  if (response.contains("error")) {
    const json& e = response.at("error");
    BackendErrorKind kind = BackendErrorKind::server;
    const std::string k = e.value("kind", "server");
    for (auto candidate : {BackendErrorKind::transport, BackendErrorKind::rate_limited, BackendErrorKind::server,
                           BackendErrorKind::auth, BackendErrorKind::bad_request}) {
      if (to_string(candidate) == k) kind = candidate;
    }
    throw BackendError(kind, e.value("message", "scripted error"), e.value("status", 0));
  }
  if (response.contains("text")) {
    out.text = response.at("text").get<std::string>();
  } else if (response.contains("image_base64")) {
    out.image_bytes = base64_decode(response.at("image_base64").get<std::string>());
    out.media_type = response.value("media_type", "image/png");
  } else if (response.contains("image_file")) {
    const auto p = dir_ / response.at("image_file").get<std::string>();
    out.image_bytes = read_file_bytes(p);
    out.media_type = response.value("media_type", media_type_for(p));
  } else if (response.contains("embedding")) {
    out.embeddings.push_back(response.at("embedding").get<std::vector<double>>());
  } else if (response.contains("embeddings")) {
    out.embeddings = response.at("embeddings").get<std::vector<std::vector<double>>>();
  } else if (response.value("synthesize_image", false)) {
    std::string prompt = req.payload.value("prompt", std::string());
    if (req.capability == Capability::edit_image) {
      std::string base;
      if (!req.images.empty()) base = ppm_prompt(read_file_bytes(req.images.front().path));
      prompt = base.empty() ? req.payload.value("instruction", std::string())
                            : base + " " + req.payload.value("instruction", std::string());
    }
    out.image_bytes = synthesize_ppm(fp, prompt);
    out.media_type = "image/x-portable-pixmap";
  } else if (response.value("describe_image", false)) {
    if (req.images.empty()) throw BackendError(BackendErrorKind::bad_request, "describe_image needs an image");
    std::vector<std::string> parts;
    for (const auto& img : req.images) {
      std::string p = ppm_prompt(read_file_bytes(img.path));
      parts.push_back(p.empty() ? "An illustrated panel." : p);
    }
    out.text = text::join(parts, "\n");
  } else if (response.value("embed_auto", false)) {
    if (!req.images.empty()) {
      for (const auto& img : req.images) out.embeddings.push_back(embed_bytes(read_file_bytes(img.path)));
    } else {
      for (const auto& t : req.payload.at("inputs")) out.embeddings.push_back(embed_text(t.get<std::string>()));
    }
  } else {
    throw BackendError(BackendErrorKind::bad_request, "fixture has no recognised response form");
  }
  if (!response.is_null() && response.contains("meta")) out.provider_meta["fixture"] = response.at("meta");
  return out;
}

// ---------------------------------------------------------------------------

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner, std::filesystem::path fixture_dir)
    : inner_(std::move(inner)), dir_(std::move(fixture_dir)) {
  if (!inner_) throw BackendError(BackendErrorKind::not_configured, "recording backend needs an inner backend");
}

BackendResponse RecordingBackend::call(const BackendRequest& req) {
  BackendResponse resp = inner_->call(req);
  json response;
  if (!resp.image_bytes.empty()) {
    response = {{"image_base64", base64_encode(resp.image_bytes)}, {"media_type", resp.media_type}};
  } else if (!resp.embeddings.empty()) {
    response = {{"embeddings", resp.embeddings}};
  } else {
    response = {{"text", resp.text}};
  }
  const json doc = {{"request",
                     {{"capability", to_string(req.capability)}, {"model_id", req.model_id}, {"payload", req.payload}}},
                    {"response", response}};
  std::lock_guard<std::mutex> lock(mu_);
  write_file_bytes(dir_ / std::string(to_string(req.capability)) / (req.fingerprint() + ".json"), doc.dump(2));
  return resp;
}

}  // namespace logistory
