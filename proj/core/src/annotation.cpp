#include "logistory/annotation.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "logistory/eval.hpp"
#include "logistory/hashing.hpp"
#include "logistory/text.hpp"

namespace logistory {

namespace {

constexpr std::pair<Dimension, std::string_view> kDimensions[] = {
    {Dimension::instance_consistency, "instance_consistency"},
    {Dimension::narrative_causality_vqa, "narrative_causality_vqa"},
    {Dimension::story_readability, "story_readability"},
    {Dimension::aesthetic_appeal, "aesthetic_appeal"},
};

}  // namespace

std::string_view to_string(Dimension d) {
  for (const auto& [k, name] : kDimensions) {
    if (k == d) return name;
  }
  return "unknown";
}

Dimension parse_dimension(std::string_view s) {
  for (const auto& [k, name] : kDimensions) {
    if (name == s) return k;
  }
  throw DomainError("unknown dimension '" + std::string(s) + "'");
}

const std::vector<Dimension>& all_dimensions() {
  static const std::vector<Dimension> dims = {Dimension::instance_consistency, Dimension::narrative_causality_vqa,
                                              Dimension::story_readability, Dimension::aesthetic_appeal};
  return dims;
}

bool is_vqa(Dimension d) { return d == Dimension::narrative_causality_vqa; }

std::tuple<std::string, std::int64_t, std::string, int, int> RatingRecord::key() const {
  return {annotator_id, story_id, method_label, static_cast<int>(dimension), item_ref.value_or(0)};
}

void to_json(json& j, const RatingRecord& r) {
  j = json{{"annotator_id", r.annotator_id},
           {"story_id", r.story_id},
           {"method_label", r.method_label},
           {"dimension", to_string(r.dimension)},
           {"item_ref", r.item_ref ? json(*r.item_ref) : json(nullptr)},
           {"value", r.value},
           {"presentation_seed", r.presentation_seed},
           {"timestamp", r.timestamp}};
  if (!r.task_id.empty()) j["task_id"] = r.task_id;
}

void from_json(const json& j, RatingRecord& r) {
  r.annotator_id = j.at("annotator_id").get<std::string>();
  r.story_id = j.at("story_id").get<std::int64_t>();
  r.method_label = j.at("method_label").get<std::string>();
  r.dimension = parse_dimension(j.at("dimension").get<std::string>());
  const json& ref = j.at("item_ref");
  r.item_ref = ref.is_null() ? std::nullopt : std::optional<int>(ref.get<int>());
  r.value = j.at("value");
  r.presentation_seed = j.value("presentation_seed", std::int64_t{0});
  r.timestamp = j.value("timestamp", std::string());
  r.task_id = j.value("task_id", std::string());
}

std::vector<FieldError> validate_rating(const RatingRecord& r, int event_count) {
  std::vector<FieldError> out;
  if (text::trim(r.annotator_id).empty()) out.push_back({"annotator_id", "must be a non-empty string"});
  if (is_vqa(r.dimension)) {
    if (!r.item_ref) {
      out.push_back({"item_ref", "VQA ratings need the event index"});
    } else if (*r.item_ref < 1 || *r.item_ref > event_count) {
      out.push_back({"item_ref", "event index must lie in 1.." + std::to_string(event_count)});
    }
    if (!r.value.is_string() || (r.value != "yes" && r.value != "no")) {
      out.push_back({"value", "VQA value must be \"yes\" or \"no\""});
    }
  } else {
    if (r.item_ref) out.push_back({"item_ref", "must be null for " + std::string(to_string(r.dimension))});
    if (!r.value.is_number_integer() || r.value.get<std::int64_t>() < 1 || r.value.get<std::int64_t>() > 5) {
      out.push_back({"value", "rating must be an integer from 1 to 5"});
    }
  }
  return out;
}

std::map<Dimension, RatingTable> rating_tables(const std::vector<RatingRecord>& records) {
  using Item = std::tuple<std::int64_t, std::string, int>;
  std::map<Dimension, std::map<Item, std::map<std::string, double>>> grouped;
  std::map<Dimension, std::set<std::string>> raters;
  for (const auto& r : records) {
    double v = 0.0;
    if (is_vqa(r.dimension)) {
      v = r.value == "yes" ? 1.0 : 0.0;
    } else {
      v = r.value.get<double>();
    }
    grouped[r.dimension][{r.story_id, r.method_label, r.item_ref.value_or(0)}][r.annotator_id] = v;
    raters[r.dimension].insert(r.annotator_id);
  }
  std::map<Dimension, RatingTable> out;
  for (const auto& [dim, items] : grouped) {
    RatingTable t;
    t.scale = is_vqa(dim) ? std::vector<double>{0.0, 1.0} : std::vector<double>{1, 2, 3, 4, 5};
    const std::vector<std::string> who(raters[dim].begin(), raters[dim].end());
    for (const auto& [_, by_rater] : items) {
      std::vector<std::optional<double>> row(who.size());
      for (std::size_t i = 0; i < who.size(); ++i) {
        const auto it = by_rater.find(who[i]);
        if (it != by_rater.end()) row[i] = it->second;
      }
      t.cells.push_back(std::move(row));
    }
    out[dim] = std::move(t);
  }
  return out;
}

RatingsLoad load_ratings(const std::filesystem::path& path) {
  RatingsLoad out;
  if (!std::filesystem::exists(path)) return out;
  const std::string content = read_file_bytes(path);
  std::vector<std::string> good_lines;
  std::vector<std::string> bad_lines;
  std::set<std::tuple<std::string, std::int64_t, std::string, int, int>> seen;
  std::size_t start = 0;
  while (start < content.size()) {
    std::size_t end = content.find('\n', start);
    const bool terminated = end != std::string::npos;
    if (!terminated) end = content.size();
    const std::string line = content.substr(start, end - start);
    start = end + 1;
    if (text::trim(line).empty()) continue;
    try {
      RatingRecord r = json::parse(line).get<RatingRecord>();
      if (!seen.insert(r.key()).second) throw Error("duplicate");
      good_lines.push_back(line);
      out.records.push_back(std::move(r));
    } catch (const std::exception&) {
      bad_lines.push_back(line);
    }
  }
  out.quarantined = bad_lines.size();
  const bool needs_newline = !content.empty() && content.back() != '\n';
  if (!bad_lines.empty()) {
    std::ofstream q(path.string() + ".quarantine", std::ios::binary | std::ios::app);
    for (const auto& l : bad_lines) q << l << "\n";
    if (!q) throw Error("cannot write " + path.string() + ".quarantine");
  }
  if (!bad_lines.empty() || needs_newline) {
    std::string rewritten;
    for (const auto& l : good_lines) rewritten += l + "\n";
    write_file_bytes(path, rewritten);
  }
  return out;
}

// ---------------------------------------------------------------------------

AnnotationConfig annotation_config_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw DomainError("annotation config must be an object");
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  AnnotationConfig c;
  c.data_dir = resolve(j.value("data_dir", std::string("annotation")));
  if (j.contains("dimensions")) {
    c.dimensions.clear();
    for (const auto& d : j.at("dimensions")) c.dimensions.push_back(parse_dimension(d.get<std::string>()));
    if (c.dimensions.empty()) throw DomainError("annotation dimensions must not be empty");
  }
  c.batch_size = j.value("batch_size", c.batch_size);
  if (c.batch_size == 0) throw DomainError("batch_size must be positive");
  c.presentation_seed = j.value("presentation_seed", c.presentation_seed);
  c.secret = j.value("secret", c.secret);
  if (j.contains("token_env")) {
    const std::string var = j.at("token_env").get<std::string>();
    const char* v = std::getenv(var.c_str());
    if (!v || !*v) throw DomainError("environment variable " + var + " (annotation token) is not set");
    c.token = v;
  }
  for (const auto& r : j.value("runs", json::array())) {
    RegisteredSequence s;
    s.run_dir = resolve(r.at("dir").get<std::string>());
    s.method_label = r.at("method").get<std::string>();
    if (r.contains("story_id")) {
      s.story_id = r.at("story_id").get<std::int64_t>();
    } else {
      const json run = json::parse(read_file_bytes(s.run_dir / "run.json"));
      s.story_id = run.at("story_id").get<std::int64_t>();
    }
    c.sequences.push_back(std::move(s));
  }
  return c;
}

namespace {

std::string rubric_template(Dimension d) { return "rubric_" + std::string(to_string(d)); }

}  // namespace

AnnotationService::AnnotationService(AnnotationConfig config, const Dataset& dataset,
                                     const TemplateLibrary& templates)
    : config_(std::move(config)), dataset_(dataset) {
  for (Dimension d : config_.dimensions) rubrics_[d] = templates.get(rubric_template(d)).text();

  json unblind = json::object();
  for (const auto& reg : config_.sequences) {
    dataset_.at(reg.story_id);  // throws for unknown stories
    Sequence s;
    s.story_id = reg.story_id;
    s.method_label = reg.method_label;
    s.images = load_final_images(reg.run_dir);
    sequences_.push_back(std::move(s));
    const std::size_t si = sequences_.size() - 1;
    for (Dimension d : config_.dimensions) {
      Task t;
      t.sequence = si;
      t.dimension = d;
      t.id = "t" + sha256_hex(config_.secret + "|" + std::to_string(reg.story_id) + "|" + reg.method_label + "|" +
                              std::string(to_string(d)))
                       .substr(0, 12);
      if (task_index_.count(t.id)) {
        throw DomainError("sequence registered twice: story " + std::to_string(reg.story_id) + ", method " +
                          reg.method_label);
      }
      task_index_[t.id] = tasks_.size();
      unblind[t.id] = {{"story_id", reg.story_id},
                       {"method_label", reg.method_label},
                       {"dimension", to_string(d)},
                       {"run_dir", reg.run_dir.string()}};
      tasks_.push_back(std::move(t));
    }
  }
  std::filesystem::create_directories(config_.data_dir);
  write_file_bytes(config_.data_dir / "unblind.json", unblind.dump(2) + "\n");

  const auto ratings_path = config_.data_dir / "ratings.jsonl";
  RatingsLoad loaded = load_ratings(ratings_path);
  quarantined_ = loaded.quarantined;
  for (auto& r : loaded.records) {
    keys_.insert(r.key());
    records_.push_back(std::move(r));
  }
  writer_ = std::make_unique<LineAppender>(ratings_path);

  // Questions come from the same template automatic evaluation uses.
  const PromptTemplate& vqa = templates.get("causal_vqa");
  for (const auto& s : sequences_) {
    if (questions_.count(s.story_id)) continue;
    std::vector<std::string> qs;
    for (const auto& ev : dataset_.at(s.story_id).causal_event_chain) {
      qs.push_back(vqa.render({{"action", ev.action}, {"result", ev.result}}));
    }
    questions_[s.story_id] = std::move(qs);
  }
}

std::int64_t AnnotationService::seed_for(const std::string& /*annotator*/) const {
  return config_.presentation_seed;
}

std::vector<std::optional<int>> AnnotationService::items_of(const Task& t) const {
  if (!is_vqa(t.dimension)) return {std::nullopt};
  std::vector<std::optional<int>> out;
  const auto& qs = questions_.at(sequences_[t.sequence].story_id);
  for (std::size_t i = 0; i < qs.size(); ++i) out.push_back(static_cast<int>(i + 1));
  return out;
}

bool AnnotationService::completed_by(const Task& t, const std::string& annotator) const {
  const Sequence& s = sequences_[t.sequence];
  for (const auto& item : items_of(t)) {
    if (!keys_.count({annotator, s.story_id, s.method_label, static_cast<int>(t.dimension), item.value_or(0)})) {
      return false;
    }
  }
  return true;
}

json AnnotationService::task_json(const Task& t) const {
  const Sequence& s = sequences_[t.sequence];
  const StoryRecord& story = dataset_.at(s.story_id);
  json items = json::array();
  if (is_vqa(t.dimension)) {
    const auto& qs = questions_.at(s.story_id);
    for (std::size_t i = 0; i < qs.size(); ++i) items.push_back({{"item_ref", i + 1}, {"question", qs[i]}});
  } else {
    items.push_back({{"item_ref", nullptr}});
  }
  json images = json::array();
  for (std::size_t n = 1; n <= s.images.size(); ++n) {
    images.push_back({{"n", n}, {"url", "/api/task/" + t.id + "/image/" + std::to_string(n)}});
  }
  json scale = is_vqa(t.dimension) ? json::array({"yes", "no"}) : json::array({1, 2, 3, 4, 5});
  return json{{"task_id", t.id},
              {"story_id", s.story_id},
              {"title", story.title},
              {"story_text", story.story_outline},
              {"dimension", to_string(t.dimension)},
              {"prompt", rubrics_.at(t.dimension)},
              {"scale", scale},
              {"items", items},
              {"images", images}};
}

ApiResponse AnnotationService::tasks(const std::string& annotator, const std::optional<std::string>& dimension,
                                     std::optional<std::size_t> limit) const {
  if (text::trim(annotator).empty()) {
    return {422, {{"errors", json::array({{{"field", "annotator"}, {"message", "required"}}})}}, {}, {}};
  }
  std::optional<Dimension> only;
  if (dimension) {
    try {
      only = parse_dimension(*dimension);
    } catch (const DomainError& e) {
      return {422, {{"errors", json::array({{{"field", "dimension"}, {"message", e.what()}}})}}, {}, {}};
    }
  }
  std::vector<std::size_t> order(tasks_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Per-annotator order, reproducible from (annotator, presentation_seed).
  stable_shuffle(order, static_cast<std::uint64_t>(config_.presentation_seed) ^ stable_seed(annotator));

  const std::size_t cap = limit.value_or(config_.batch_size);
  json batch = json::array();
  std::size_t remaining = 0;
  std::lock_guard<std::mutex> lock(mu_);
  for (std::size_t i : order) {
    const Task& t = tasks_[i];
    if (only && t.dimension != *only) continue;
    if (completed_by(t, annotator)) continue;
    ++remaining;
    if (batch.size() < cap) batch.push_back(task_json(t));
  }
  return {200,
          {{"annotator", annotator},
           {"presentation_seed", seed_for(annotator)},
           {"tasks", batch},
           {"remaining", remaining}},
          {},
          {}};
}

ApiResponse AnnotationService::image(const std::string& task_id, int n) const {
  const auto it = task_index_.find(task_id);
  if (it == task_index_.end()) return {404, {{"error", "unknown task"}}, {}, {}};
  const Sequence& s = sequences_[tasks_[it->second].sequence];
  if (n < 1 || static_cast<std::size_t>(n) > s.images.size()) return {404, {{"error", "no such image"}}, {}, {}};
  const ImageRef& ref = s.images[static_cast<std::size_t>(n - 1)];
  ApiResponse r;
  r.bytes = read_file_bytes(ref.path);
  r.media_type = ref.media_type.empty() ? "application/octet-stream" : ref.media_type;
  return r;
}

ApiResponse AnnotationService::submit(const std::string& body) {
  auto unprocessable = [](std::vector<FieldError> errs) {
    json arr = json::array();
    for (const auto& e : errs) arr.push_back({{"field", e.field}, {"message", e.message}});
    return ApiResponse{422, {{"errors", arr}}, {}, {}};
  };
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    return unprocessable({{"body", std::string("invalid JSON: ") + e.what()}});
  }
  if (!doc.is_object()) return unprocessable({{"body", "must be a JSON object"}});

  std::vector<FieldError> errs;
  if (!doc.contains("task_id") || !doc.at("task_id").is_string()) {
    return unprocessable({{"task_id", "required string"}});
  }
  const auto it = task_index_.find(doc.at("task_id").get<std::string>());
  if (it == task_index_.end()) return {404, {{"error", "unknown task"}}, {}, {}};
  const Task& task = tasks_[it->second];
  const Sequence& seq = sequences_[task.sequence];

  RatingRecord r;
  r.task_id = task.id;
  r.story_id = seq.story_id;
  r.method_label = seq.method_label;
  r.dimension = task.dimension;
  r.presentation_seed = config_.presentation_seed;
  if (doc.contains("method_label")) errs.push_back({"method_label", "assigned by the server; do not send"});
  if (doc.contains("annotator_id") && doc.at("annotator_id").is_string()) {
    r.annotator_id = doc.at("annotator_id").get<std::string>();
  } else {
    errs.push_back({"annotator_id", "required string"});
  }
  if (doc.contains("story_id") && (!doc.at("story_id").is_number_integer() ||
                                   doc.at("story_id").get<std::int64_t>() != seq.story_id)) {
    errs.push_back({"story_id", "does not match the task"});
  }
  if (!doc.contains("dimension") || !doc.at("dimension").is_string()) {
    errs.push_back({"dimension", "required string"});
  } else if (doc.at("dimension").get<std::string>() != to_string(task.dimension)) {
    errs.push_back({"dimension", "task is for " + std::string(to_string(task.dimension))});
  }
  if (doc.contains("item_ref") && !doc.at("item_ref").is_null()) {
    if (doc.at("item_ref").is_number_integer()) {
      r.item_ref = doc.at("item_ref").get<int>();
    } else {
      errs.push_back({"item_ref", "must be an integer or null"});
    }
  }
  if (doc.contains("presentation_seed")) {
    if (!doc.at("presentation_seed").is_number_integer()) {
      errs.push_back({"presentation_seed", "must be an integer"});
    } else {
      r.presentation_seed = doc.at("presentation_seed").get<std::int64_t>();
    }
  }
  if (!doc.contains("value")) {
    errs.push_back({"value", "required"});
  } else {
    r.value = doc.at("value");
    const int events = static_cast<int>(questions_.at(seq.story_id).size());
    for (auto& e : validate_rating(r, events)) {
      if (e.field != "annotator_id") errs.push_back(std::move(e));
    }
  }
  if (!r.annotator_id.empty() && text::trim(r.annotator_id).empty()) {
    errs.push_back({"annotator_id", "must be a non-empty string"});
  }
  if (!errs.empty()) return unprocessable(std::move(errs));

  r.timestamp = utc_timestamp();
  std::lock_guard<std::mutex> lock(mu_);
  if (keys_.count(r.key())) {
    return {409, {{"error", "duplicate rating"}, {"task_id", task.id}, {"item_ref", r.item_ref ? json(*r.item_ref) : json(nullptr)}}, {}, {}};
  }
  writer_->append(json(r).dump());
  keys_.insert(r.key());
  records_.push_back(r);
  return {201,
          {{"status", "created"},
           {"task_id", task.id},
           {"dimension", to_string(task.dimension)},
           {"item_ref", r.item_ref ? json(*r.item_ref) : json(nullptr)}},
          {},
          {}};
}

ApiResponse AnnotationService::progress(const std::string& annotator) const {
  if (text::trim(annotator).empty()) {
    return {422, {{"errors", json::array({{{"field", "annotator"}, {"message", "required"}}})}}, {}, {}};
  }
  json dims = json::object();
  std::lock_guard<std::mutex> lock(mu_);
  for (Dimension d : config_.dimensions) {
    std::size_t rated = 0, total = 0, done = 0, tasks = 0;
    for (const auto& t : tasks_) {
      if (t.dimension != d) continue;
      ++tasks;
      const Sequence& s = sequences_[t.sequence];
      for (const auto& item : items_of(t)) {
        ++total;
        if (keys_.count({annotator, s.story_id, s.method_label, static_cast<int>(d), item.value_or(0)})) ++rated;
      }
      if (completed_by(t, annotator)) ++done;
    }
    dims[std::string(to_string(d))] = {
        {"rated_items", rated}, {"total_items", total}, {"completed_tasks", done}, {"total_tasks", tasks}};
  }
  return {200, {{"annotator", annotator}, {"dimensions", dims}}, {}, {}};
}

bool AnnotationService::authorized(const std::string& header) const {
  return config_.token.empty() || header == "Bearer " + config_.token;
}

std::vector<RatingRecord> AnnotationService::records() const {
  std::lock_guard<std::mutex> lock(mu_);
  return records_;
}

std::vector<std::string> AnnotationService::task_ids() const {
  std::vector<std::string> out;
  for (const auto& t : tasks_) out.push_back(t.id);
  return out;
}

}  // namespace logistory
