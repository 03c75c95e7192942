#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "logistory/backends.hpp"

namespace logistory {

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Capability each engine role must provide.
Capability role_capability(const std::string& role);
const std::vector<std::string>& known_roles();

// Config file layout:
// {
//   "roles": {
//     "planner":   {"endpoint": "https://host/v1", "model_id": "...", "api_key_env": "API_KEY",
//                   "timeout_ms": 60000, "retry": {...}, "rate_limit": {"requests": 60, "window_ms": 60000}},
//     "editor":    [{"name": "first", ...}, {"name": "second", ...}],
//     "captioner": {"mock": "fixtures/dir", "model_id": "..."},
//     ...
//   },
//   "pipeline": {...}, "eval": {...}, "annotation": {...}
// }
// A role given as a list registers every entry as a named alternative and
// the first as the default. Relative mock paths resolve against the config
// file's directory.
struct EngineConfig {
  BackendRegistry backends;
  json pipeline = json::object();
  json eval = json::object();
  json annotation = json::object();
  std::filesystem::path base_dir;
};

EngineConfig parse_engine_config(const json& doc, const std::filesystem::path& base_dir);
EngineConfig load_engine_config(const std::filesystem::path& path);  // throws ConfigError

// Binds every known role to one MockBackend over `fixture_dir`. Model ids
// from `base` are kept when present, otherwise "mock".
void bind_mock_backends(EngineConfig& cfg, const std::filesystem::path& fixture_dir);

}  // namespace logistory
