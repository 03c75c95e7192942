#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "logistory/backends.hpp"
#include "logistory/dataset.hpp"
#include "logistory/prompt_template.hpp"
#include "logistory/run_store.hpp"
#include "logistory/stats.hpp"

namespace logistory {

enum class Dimension { instance_consistency, narrative_causality_vqa, story_readability, aesthetic_appeal };

std::string_view to_string(Dimension d);
Dimension parse_dimension(std::string_view s);  // throws DomainError
const std::vector<Dimension>& all_dimensions();
bool is_vqa(Dimension d);

struct RatingRecord {
  std::string annotator_id;
  std::int64_t story_id = 0;
  std::string method_label;
  Dimension dimension = Dimension::instance_consistency;
  std::optional<int> item_ref;  // event index for VQA
  json value;                   // integer 1-5, or "yes"/"no" for VQA
  std::int64_t presentation_seed = 0;
  std::string timestamp;
  std::string task_id;

  // (annotator, story, method, dimension, item_ref)
  std::tuple<std::string, std::int64_t, std::string, int, int> key() const;
};

void to_json(json& j, const RatingRecord& r);
void from_json(const json& j, RatingRecord& r);

struct FieldError {
  std::string field;
  std::string message;
};

// Domain checks on a complete record. Empty means valid.
std::vector<FieldError> validate_rating(const RatingRecord& r, int event_count);

// One table per dimension: items are (story, method, item_ref), raters are
// annotators. VQA answers map to 0 (no) and 1 (yes).
std::map<Dimension, RatingTable> rating_tables(const std::vector<RatingRecord>& records);

struct RatingsLoad {
  std::vector<RatingRecord> records;
  std::size_t quarantined = 0;
};

// Reads ratings JSONL. Lines that do not parse (a crash-truncated tail, for
// instance) are moved to <path>.quarantine and the file is rewritten without
// them. Throws Error on IO failure only.
RatingsLoad load_ratings(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct RegisteredSequence {
  std::filesystem::path run_dir;
  std::string method_label;
  std::int64_t story_id = 0;
};

struct AnnotationConfig {
  std::filesystem::path data_dir;  // ratings.jsonl, unblind.json
  std::vector<RegisteredSequence> sequences;
  std::vector<Dimension> dimensions = all_dimensions();
  std::size_t batch_size = 4;
  std::int64_t presentation_seed = 0;
  std::string secret = "logistory";  // salts task ids so they do not reveal methods
  std::string token;                 // bearer token; empty disables auth
};

// Relative paths resolve against base_dir. "token_env" names an environment
// variable holding the bearer token.
AnnotationConfig annotation_config_from_json(const json& j, const std::filesystem::path& base_dir);

struct ApiResponse {
  int status = 200;
  json body;
  std::string bytes;  // raw body for image responses
  std::string media_type;
};

// Server-side state of a blind rating study. Thread-safe.
class AnnotationService {
 public:
  AnnotationService(AnnotationConfig config, const Dataset& dataset, const TemplateLibrary& templates);

  ApiResponse tasks(const std::string& annotator, const std::optional<std::string>& dimension,
                    std::optional<std::size_t> limit) const;
  ApiResponse image(const std::string& task_id, int n) const;
  ApiResponse submit(const std::string& body);
  ApiResponse progress(const std::string& annotator) const;

  bool authorized(const std::string& authorization_header) const;
  std::size_t quarantined_on_start() const { return quarantined_; }
  std::vector<RatingRecord> records() const;
  std::vector<std::string> task_ids() const;

 private:
  struct Task {
    std::string id;
    std::size_t sequence = 0;
    Dimension dimension = Dimension::instance_consistency;
  };
  struct Sequence {
    std::int64_t story_id = 0;
    std::string method_label;
    std::vector<ImageRef> images;
  };

  json task_json(const Task& t) const;
  std::vector<std::optional<int>> items_of(const Task& t) const;
  bool completed_by(const Task& t, const std::string& annotator) const;  // caller holds mu_
  std::int64_t seed_for(const std::string& annotator) const;

  AnnotationConfig config_;
  const Dataset& dataset_;
  std::map<Dimension, std::string> rubrics_;
  std::map<std::int64_t, std::vector<std::string>> questions_;  // VQA items per story
  std::vector<Sequence> sequences_;
  std::vector<Task> tasks_;
  std::map<std::string, std::size_t> task_index_;

  mutable std::mutex mu_;
  std::set<std::tuple<std::string, std::int64_t, std::string, int, int>> keys_;
  std::vector<RatingRecord> records_;
  std::unique_ptr<LineAppender> writer_;
  std::size_t quarantined_ = 0;
};

// HTTP front end: GET /api/tasks, GET /api/task/<id>/image/<n>,
// POST /api/ratings, GET /api/progress.
class AnnotationServer {
 public:
  explicit AnnotationServer(AnnotationService& service);
  ~AnnotationServer();

  // Binds and serves on a background thread. port 0 picks a free port.
  int start(const std::string& host, int port);
  // Binds and serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace logistory
