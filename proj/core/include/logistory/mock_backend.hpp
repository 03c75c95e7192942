#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "logistory/backends.hpp"

namespace logistory {

// Fixture-driven backend. Lookup order for a request with fingerprint F:
//   1. <dir>/<capability>/<F>.json
//   2. the first matching rule in <dir>/aliases.json
// and otherwise BackendError(no_fixture, "no fixture for fingerprint F").
//
// A fixture file holds either a response object or {"response": {...}}.
// Response forms:
//   {"text": "..."}
//   {"image_base64": "...", "media_type": "image/png"}
//   {"image_file": "relative/path.png"}
//   {"embedding": [...]} / {"embeddings": [[...], ...]}
//   {"synthesize_image": true}   deterministic PPM derived from the request;
//                                the prompt is kept in a header comment
//   {"describe_image": true}     returns the prompt stored by synthesize_image
//   {"embed_auto": true}         vectors from the "embed" section of mock.json
//   {"error": {"kind": "transport", "message": "...", "status": 503}}
//
// Alias rule: {"capability": "chat", "where": {"template": "scenecrafter"},
//              "contains": ["substring of the dumped payload"], "response": {...}}
// Every field except "response" is optional; rules are tried in file order.
//
// mock.json "embed" section: {"mode": "hashed", "dim": 64} or
// {"mode": "unit_basis", "vocabulary": ["a", "b"]}.
class MockBackend : public Backend {
 public:
  explicit MockBackend(std::filesystem::path fixture_dir);

  bool supports(Capability) const override { return true; }
  BackendResponse call(const BackendRequest& req) override;

  const std::filesystem::path& directory() const { return dir_; }

 private:
  struct Alias {
    std::optional<Capability> capability;
    json where = json::object();
    std::vector<std::string> contains;
    json response;
  };

  BackendResponse materialize(const BackendRequest& req, const std::string& fp, const json& response) const;
  std::vector<double> embed_text(const std::string& text) const;
  std::vector<double> embed_bytes(const std::string& bytes) const;

  std::filesystem::path dir_;
  std::vector<Alias> aliases_;
  std::string embed_mode_ = "hashed";
  std::size_t embed_dim_ = 64;
  std::vector<std::string> vocabulary_;
};

// Calls `inner` and stores each successful response as a fixture under
// `fixture_dir`, so a live session can be replayed with MockBackend.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner, std::filesystem::path fixture_dir);

  bool supports(Capability c) const override { return inner_->supports(c); }
  BackendResponse call(const BackendRequest& req) override;

 private:
  std::shared_ptr<Backend> inner_;
  std::filesystem::path dir_;
  std::mutex mu_;
};

// 16x16 binary PPM whose colour is derived from `seed`; `prompt` is kept as a
// header comment so describe_image can recover it.
std::string synthesize_ppm(const std::string& seed, const std::string& prompt);
// Prompt stored by synthesize_ppm, or empty.
std::string ppm_prompt(const std::string& bytes);

}  // namespace logistory
