#include "logistory/config.hpp"

#include <cstdlib>

#include "logistory/http_backend.hpp"
#include "logistory/mock_backend.hpp"

namespace logistory {

namespace {

const std::map<std::string, Capability>& role_table() {
  static const std::map<std::string, Capability> table = {
      {"planner", Capability::chat},         {"generator", Capability::generate_image},
      {"editor", Capability::edit_image},    {"captioner", Capability::caption},
      {"monitor", Capability::chat},         {"verifier", Capability::chat},
      {"judge", Capability::vqa},            {"vqa", Capability::vqa},
      {"aesthetic", Capability::vqa},        {"reader", Capability::chat},
      {"embedder", Capability::embed},       {"image_embedder", Capability::embed},
  };
  return table;
}

ModelSlot build_slot(const std::string& role, const json& spec, const std::filesystem::path& base_dir) {
  if (!spec.is_object()) throw ConfigError("roles." + role + " must be an object");
  ModelSlot slot;
  slot.model_id = spec.value("model_id", std::string("mock"));
  try {
    if (spec.contains("retry")) slot.retry = spec.at("retry").get<RetryPolicy>();
  } catch (const std::exception& e) {
    throw ConfigError("roles." + role + ".retry: " + e.what());
  }
  if (spec.contains("mock")) {
    std::filesystem::path dir = spec.at("mock").get<std::string>();
    if (dir.is_relative()) dir = base_dir / dir;
    slot.backend = std::make_shared<MockBackend>(dir);
    return slot;
  }
  if (!spec.contains("endpoint")) throw ConfigError("roles." + role + ": needs \"endpoint\" or \"mock\"");
  HttpEndpoint ep;
  ep.base_url = spec.at("endpoint").get<std::string>();
  ep.timeout_ms = spec.value("timeout_ms", ep.timeout_ms);
  if (spec.contains("api_key_env")) {
    const std::string var = spec.at("api_key_env").get<std::string>();
    const char* value = std::getenv(var.c_str());
    if (!value || !*value) {
      throw ConfigError("roles." + role + ": environment variable " + var + " is not set");
    }
    ep.api_key = value;
  }
  if (spec.contains("rate_limit")) {
    const json& rl = spec.at("rate_limit");
    ep.rate_limit_requests = rl.value("requests", 0);
    ep.rate_limit_window_ms = rl.value("window_ms", 60000);
  }
  std::map<Capability, HttpEndpoint> eps;
  eps[role_capability(role)] = ep;
  slot.backend = std::make_shared<HttpBackend>(std::move(eps));
  return slot;
}

}  // namespace

Capability role_capability(const std::string& role) {
  auto it = role_table().find(role);
  if (it == role_table().end()) throw ConfigError("unknown role '" + role + "'");
  return it->second;
}

const std::vector<std::string>& known_roles() {
  static const std::vector<std::string> roles = [] {
    std::vector<std::string> out;
    for (const auto& [r, _] : role_table()) out.push_back(r);
    return out;
  }();
  return roles;
}

EngineConfig parse_engine_config(const json& doc, const std::filesystem::path& base_dir) {
  EngineConfig cfg;
  cfg.base_dir = base_dir;
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  if (doc.contains("roles")) {
    for (const auto& [role, spec] : doc.at("roles").items()) {
      role_capability(role);
      if (spec.is_array()) {
        if (spec.empty()) throw ConfigError("roles." + role + " is an empty list");
        for (std::size_t i = 0; i < spec.size(); ++i) {
          ModelSlot slot = build_slot(role, spec[i], base_dir);
          const std::string name = spec[i].value("name", slot.model_id);
          if (i == 0) cfg.backends.set(role, slot);
          cfg.backends.add_alternative(role, name, std::move(slot));
        }
      } else {
        cfg.backends.set(role, build_slot(role, spec, base_dir));
      }
    }
  }
  cfg.pipeline = doc.value("pipeline", json::object());
  cfg.eval = doc.value("eval", json::object());
  cfg.annotation = doc.value("annotation", json::object());
  return cfg;
}

EngineConfig load_engine_config(const std::filesystem::path& path) {
  std::string content;
  try {
    content = read_file_bytes(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  json doc;
  try {
    doc = json::parse(content);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  try {
    return parse_engine_config(doc, path.has_parent_path() ? path.parent_path() : std::filesystem::path("."));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void bind_mock_backends(EngineConfig& cfg, const std::filesystem::path& fixture_dir) {
  auto mock = std::make_shared<MockBackend>(fixture_dir);
  for (const auto& role : known_roles()) {
    ModelSlot slot;
    slot.backend = mock;
    if (const ModelSlot* existing = cfg.backends.find(role)) {
      slot.model_id = existing->model_id;
      slot.retry = existing->retry;
    } else {
      slot.model_id = "mock";
    }
    cfg.backends.set(role, std::move(slot));
  }
}

}  // namespace logistory
