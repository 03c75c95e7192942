#include "logistory/eval.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "logistory/text.hpp"

namespace logistory {

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names = {kMetricInstanceConsistency, kMetricNarrativeCausality,
                                                 kMetricStoryReadability,    kMetricAestheticQuality,
                                                 kMetricStyleConsistency,    kMetricCharacterExpressiveness};
  return names;
}

std::string_view to_string(CausalMode m) { return m == CausalMode::vqa_binary ? "vqa_binary" : "rubric_0_1"; }

CausalMode parse_causal_mode(std::string_view s) {
  if (s == "vqa_binary") return CausalMode::vqa_binary;
  if (s == "rubric_0_1") return CausalMode::rubric_0_1;
  throw DomainError("unknown causal mode '" + std::string(s) + "' (expected vqa_binary or rubric_0_1)");
}

std::string_view to_string(ReadabilityMapping m) { return m == ReadabilityMapping::affine ? "affine" : "raw_clamped"; }

ReadabilityMapping parse_readability_mapping(std::string_view s) {
  if (s == "affine") return ReadabilityMapping::affine;
  if (s == "raw_clamped") return ReadabilityMapping::raw_clamped;
  throw DomainError("unknown readability mapping '" + std::string(s) + "' (expected affine or raw_clamped)");
}

void to_json(json& j, const EventScore& e) {
  j = json{{"event_index", e.event_index}, {"mode", to_string(e.mode)}, {"value", e.value}, {"weight", e.weight},
           {"question", e.question},       {"answer", e.answer},         {"flagged", e.flagged}};
}

void from_json(const json& j, EventScore& e) {
  e.event_index = j.at("event_index").get<int>();
  e.mode = parse_causal_mode(j.at("mode").get<std::string>());
  e.value = j.at("value").get<double>();
  e.weight = j.at("weight").get<double>();
  e.question = j.value("question", std::string());
  e.answer = j.value("answer", std::string());
  e.flagged = j.value("flagged", false);
}

std::optional<double> EvalReport::metric(const std::string& name) const {
  if (name == kMetricInstanceConsistency) return instance_consistency;
  if (name == kMetricNarrativeCausality) return narrative_causality;
  if (name == kMetricStoryReadability) return story_readability;
  if (name == kMetricAestheticQuality) return aesthetic_quality;
  if (name == kMetricStyleConsistency) return style_consistency;
  if (name == kMetricCharacterExpressiveness) return character_expressiveness;
  throw DomainError("unknown metric '" + name + "'");
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_opt(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

void to_json(json& j, const EvalReport& r) {
  j = json{{"story_id", r.story_id},
           {"method_label", r.method_label},
           {kMetricInstanceConsistency, opt(r.instance_consistency)},
           {kMetricNarrativeCausality, opt(r.narrative_causality)},
           {kMetricStoryReadability, opt(r.story_readability)},
           {kMetricAestheticQuality, opt(r.aesthetic_quality)},
           {kMetricStyleConsistency, opt(r.style_consistency)},
           {kMetricCharacterExpressiveness, opt(r.character_expressiveness)},
           {"causal_mode", to_string(r.causal_mode)},
           {"readability_mapping", to_string(r.readability_mapping)},
           {"event_scores", r.event_scores},
           {"evidence", r.evidence},
           {"flags", r.flags},
           {"errors", r.errors}};
}

void from_json(const json& j, EvalReport& r) {
  r.story_id = j.at("story_id").get<std::int64_t>();
  r.method_label = j.value("method_label", std::string());
  r.instance_consistency = read_opt(j, kMetricInstanceConsistency);
  r.narrative_causality = read_opt(j, kMetricNarrativeCausality);
  r.story_readability = read_opt(j, kMetricStoryReadability);
  r.aesthetic_quality = read_opt(j, kMetricAestheticQuality);
  r.style_consistency = read_opt(j, kMetricStyleConsistency);
  r.character_expressiveness = read_opt(j, kMetricCharacterExpressiveness);
  r.causal_mode = parse_causal_mode(j.value("causal_mode", std::string("vqa_binary")));
  r.readability_mapping = parse_readability_mapping(j.value("readability_mapping", std::string("affine")));
  r.event_scores = j.value("event_scores", std::vector<EventScore>{});
  r.evidence = j.value("evidence", json::object());
  r.flags = j.value("flags", std::vector<std::string>{});
  r.errors = j.value("errors", std::map<std::string, std::string>{});
}

// ---------------------------------------------------------------------------

namespace {

std::string plain_line(std::string_view line) {
  std::string out;
  for (char c : line) {
    if (c != '*' && c != '#' && c != '`' && c != '_') out.push_back(c);
  }
  return text::to_lower(text::trim(out));
}

// Drops "score:", "overall rating:" and similar labels.
std::string drop_label(const std::string& line, std::initializer_list<std::string_view> labels) {
  const auto colon = line.find(':');
  if (colon == std::string::npos) return line;
  const std::string head = text::trim(std::string_view(line).substr(0, colon));
  for (auto label : labels) {
    if (head.size() >= label.size() && head.compare(head.size() - label.size(), label.size(), label) == 0) {
      return text::trim(std::string_view(line).substr(colon + 1));
    }
  }
  return line;
}

}  // namespace

std::optional<double> parse_rating(const std::string& reply) {
  static const std::regex re(R"(^([1-5])(?:\.(0|5))?(?:\s*/\s*5)?(?:$|[\s\-:).,]))");
  for (const auto& raw : text::split_lines(reply)) {
    const std::string line = drop_label(plain_line(raw), {"score", "rating"});
    std::smatch m;
    if (std::regex_search(line, m, re)) {
      double v = std::stod(m[1].str());
      if (m[2].matched && m[2].str() == "5") {
        if (v == 5.0) continue;  // 5.5 is off the scale
        v += 0.5;
      }
      return v;
    }
  }
  return std::nullopt;
}

std::optional<bool> parse_yes_no(const std::string& reply) {
  for (const auto& raw : text::split_lines(reply)) {
    const std::string line = drop_label(plain_line(raw), {"answer"});
    if (line.empty()) continue;
    std::size_t n = 0;
    while (n < line.size() && std::isalpha(static_cast<unsigned char>(line[n]))) ++n;
    const std::string word = line.substr(0, n);
    if (word == "yes") return true;
    if (word == "no") return false;
    break;
  }
  // Fall back to a reply that mentions exactly one of the two words.
  bool yes = false, no = false;
  std::string word;
  for (char c : text::to_lower(reply) + " ") {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      word.push_back(c);
      continue;
    }
    yes = yes || word == "yes";
    no = no || word == "no";
    word.clear();
  }
  if (yes != no) return yes;
  return std::nullopt;
}

std::optional<double> parse_number(const std::string& reply) {
  static const std::regex re(R"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)");
  std::smatch m;
  if (!std::regex_search(reply, m, re)) return std::nullopt;
  try {
    const double v = std::stod(m.str());
    if (!std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::optional<double> parse_rubric(const std::string& reply) {
  std::map<std::string, double> found;
  for (const auto& raw : text::split_lines(reply)) {
    const std::string line = plain_line(raw);
    for (const char* key : {"clarity", "coherence", "plausibility"}) {
      if (line.rfind(key, 0) != 0 || found.count(key)) continue;
      const auto v = parse_number(line.substr(std::string(key).size()));
      if (!v || *v < 0.0 || *v > 1.0) return std::nullopt;
      found[key] = *v;
    }
  }
  if (found.size() != 3) return std::nullopt;
  return (found["clarity"] + found["coherence"] + found["plausibility"]) / 3.0;
}

// ---------------------------------------------------------------------------

double causal_score(const std::vector<EventScore>& scores) {
  double s = 0.0;
  for (const auto& e : scores) s += e.value * e.weight;
  return s;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) throw DomainError("cosine needs two non-empty vectors of equal length");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw DomainError("cosine of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double mean_pairwise_cosine(const std::vector<std::vector<double>>& vectors) {
  if (vectors.size() < 2) throw DomainError("pairwise cosine needs at least two vectors");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      sum += cosine_similarity(vectors[i], vectors[j]);
      ++pairs;
    }
  }
  return sum / static_cast<double>(pairs);
}

double map_readability(double cosine, ReadabilityMapping mapping) {
  if (mapping == ReadabilityMapping::affine) return (cosine + 1.0) / 2.0;
  return std::clamp(cosine, 0.0, 1.0);
}

// ---------------------------------------------------------------------------

std::vector<ImageRef> load_final_images(const std::filesystem::path& run_dir) {
  const auto dir = run_dir / "final";
  if (!std::filesystem::is_directory(dir)) throw EvalError("input", "no final/ directory in " + run_dir.string());
  std::map<int, std::filesystem::path> by_index;
  static const std::regex name_re(R"(p(\d+)\.[A-Za-z0-9]+)");
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || !std::regex_match(name, m, name_re)) continue;
    const int t = std::stoi(m[1].str());
    if (by_index.count(t)) throw EvalError("input", "two final images for panel " + std::to_string(t));
    by_index[t] = entry.path();
  }
  if (by_index.empty()) throw EvalError("input", "no final images in " + dir.string());
  std::vector<ImageRef> out;
  int expected = 1;
  for (const auto& [t, p] : by_index) {
    if (t != expected) throw EvalError("input", "final images are not contiguous: panel " + std::to_string(expected) + " missing");
    out.push_back({p, media_type_for(p)});
    ++expected;
  }
  return out;
}

EvalOptions eval_options_from_json(const json& j) {
  EvalOptions o;
  if (j.is_null()) return o;
  if (!j.is_object()) throw DomainError("eval options must be an object");
  if (j.contains("causal_mode")) o.causal_mode = parse_causal_mode(j.at("causal_mode").get<std::string>());
  if (j.contains("readability_mapping")) {
    o.readability_mapping = parse_readability_mapping(j.at("readability_mapping").get<std::string>());
  }
  return o;
}

Evaluator::Evaluator(const BackendRegistry& backends, const TemplateLibrary& templates, EvalOptions options,
                     AttemptSink sink)
    : backends_(backends), templates_(templates), options_(options), sink_(std::move(sink)) {}

namespace {

const std::string kRatingReminder =
    "\n\nReply with the rating on the first line as a number from 1 to 5, for example \"4 - Very Good\", "
    "then a brief justification.";

void require_images(const EvalInput& in, const std::string& metric) {
  if (in.images.empty()) throw EvalError(metric, "no images to evaluate");
}

template <typename F>
auto wrap_backend(const std::string& metric, F f) -> decltype(f()) {
  try {
    return f();
  } catch (const BackendError& e) {
    throw EvalError(metric, std::string("backend failure: ") + e.what());
  }
}

}  // namespace

RatingResult Evaluator::rating(const EvalInput& in, const std::string& metric, const std::string& template_name) const {
  require_images(in, metric);
  return wrap_backend(metric, [&] {
    const std::string prompt = templates_.get(template_name).render({{"story", in.story.story_outline}});
    BackendRequest req;
    req.capability = Capability::vqa;
    req.payload = {{"template", template_name}, {"prompt", prompt}};
    req.images = in.images;
    RatingResult r;
    r.reply = backends_.call("judge", req, sink_).text;
    if (auto v = parse_rating(r.reply)) {
      r.value = *v;
      return r;
    }
    req.payload["prompt"] = prompt + kRatingReminder;
    req.payload["reprompt"] = 1;
    r.reply = backends_.call("judge", req, sink_).text;
    r.attempts = 2;
    if (auto v = parse_rating(r.reply)) {
      r.value = *v;
      return r;
    }
    throw EvalError(metric, "unparseable rating after re-prompt: \"" + r.reply.substr(0, 120) + "\"");
  });
}

RatingResult Evaluator::instance_consistency(const EvalInput& in) const {
  return rating(in, kMetricInstanceConsistency, "instance_consistency");
}

RatingResult Evaluator::character_expressiveness(const EvalInput& in) const {
  return rating(in, kMetricCharacterExpressiveness, "character_expressiveness");
}

std::vector<EventScore> Evaluator::narrative_causality(const EvalInput& in) const {
  const std::string metric = kMetricNarrativeCausality;
  require_images(in, metric);
  if (const auto v = validate_story_record(in.story); !v.empty()) {
    throw EvalError(metric, "story " + std::to_string(in.story.id) + " is invalid: " + v.front().message);
  }
  const bool binary = options_.causal_mode == CausalMode::vqa_binary;
  const std::string template_name = binary ? "causal_vqa" : "causal_rubric";
  return wrap_backend(metric, [&] {
    std::vector<EventScore> out;
    int index = 0;
    for (const auto& ev : in.story.causal_event_chain) {
      ++index;
      EventScore s;
      s.event_index = index;
      s.mode = options_.causal_mode;
      s.weight = ev.weight;
      s.question = templates_.get(template_name).render({{"action", ev.action}, {"result", ev.result}});
      BackendRequest req;
      req.capability = Capability::vqa;
      req.payload = {{"template", template_name}, {"event", index}, {"prompt", s.question}};
      req.images = in.images;
      auto score_of = [&](const std::string& reply) -> std::optional<double> {
        if (binary) {
          const auto yn = parse_yes_no(reply);
          if (!yn) return std::nullopt;
          return *yn ? 1.0 : 0.0;
        }
        return parse_rubric(reply);
      };
      s.answer = backends_.call("vqa", req, sink_).text;
      auto v = score_of(s.answer);
      if (!v) {
        req.payload["prompt"] = s.question + (binary ? "\nAnswer with Yes or No only."
                                                     : "\nReply with exactly the three lines shown, numbers in [0, 1].");
        req.payload["reprompt"] = 1;
        s.answer = backends_.call("vqa", req, sink_).text;
        v = score_of(s.answer);
      }
      if (v) {
        s.value = *v;
      } else {
        s.value = 0.0;
        s.flagged = true;
      }
      out.push_back(std::move(s));
    }
    return out;
  });
}

double Evaluator::story_readability(const EvalInput& in, json* evidence) const {
  const std::string metric = kMetricStoryReadability;
  require_images(in, metric);
  std::vector<std::string> captions;
  try {
    for (const auto& img : in.images) {
      BackendRequest req;
      req.capability = Capability::caption;
      req.payload = {{"template", "caption"}, {"prompt", templates_.get("caption").render({})}};
      req.images = {img};
      captions.push_back(text::trim(backends_.call("captioner", req, sink_).text));
    }
  } catch (const BackendError& e) {
    throw EvalError(metric, std::string("captioning failed: ") + e.what());
  }
  std::string numbered;
  for (std::size_t i = 0; i < captions.size(); ++i) {
    numbered += std::to_string(i + 1) + ". " + captions[i] + "\n";
  }
  std::string inferred;
  try {
    const std::string prompt = templates_.get("readability_inference")
                                   .render({{"characters", text::join(in.story.character_list, ", ")},
                                            {"captions", text::trim(numbered)}});
    BackendRequest req;
    req.capability = Capability::chat;
    req.payload = {{"template", "readability_inference"}, {"prompt", prompt}};
    inferred = text::trim(backends_.call("reader", req, sink_).text);
  } catch (const BackendError& e) {
    throw EvalError(metric, std::string("story inference failed: ") + e.what());
  }
  if (inferred.empty()) throw EvalError(metric, "story inference returned no text");
  double cosine = 0.0;
  try {
    const ModelSlot& slot = backends_.require("embedder", Capability::embed);
    const auto vecs = embed_batch(*slot.backend, {inferred, in.story.story_outline}, slot.model_id, slot.retry, sink_);
    cosine = cosine_similarity(vecs[0], vecs[1]);
  } catch (const BackendError& e) {
    throw EvalError(metric, std::string("embedding failed: ") + e.what());
  } catch (const DomainError& e) {
    throw EvalError(metric, std::string("embedding failed: ") + e.what());
  }
  if (evidence) {
    *evidence = json{{"captions", captions}, {"inferred_story", inferred}, {"cosine", cosine}};
  }
  return map_readability(cosine, options_.readability_mapping);
}

double Evaluator::aesthetic_quality(const EvalInput& in, std::vector<double>* per_image) const {
  const std::string metric = kMetricAestheticQuality;
  require_images(in, metric);
  return wrap_backend(metric, [&] {
    std::vector<double> scores;
    const std::string prompt = templates_.get("aesthetic").render({});
    for (std::size_t i = 0; i < in.images.size(); ++i) {
      BackendRequest req;
      req.capability = Capability::vqa;
      req.payload = {{"template", "aesthetic"}, {"image_index", i + 1}, {"prompt", prompt}};
      req.images = {in.images[i]};
      auto v = parse_number(backends_.call("aesthetic", req, sink_).text);
      if (!v) {
        req.payload["prompt"] = prompt + "\nReply with the number only.";
        req.payload["reprompt"] = 1;
        v = parse_number(backends_.call("aesthetic", req, sink_).text);
      }
      if (!v) throw EvalError(metric, "unparseable score for image " + std::to_string(i + 1));
      scores.push_back(*v);
    }
    double sum = 0.0;
    for (double s : scores) sum += s;
    if (per_image) *per_image = scores;
    return sum / static_cast<double>(scores.size());
  });
}

double Evaluator::style_consistency(const EvalInput& in) const {
  const std::string metric = kMetricStyleConsistency;
  if (in.images.size() < 2) throw EvalError(metric, "needs at least two images");
  try {
    const ModelSlot& slot = backends_.require("image_embedder", Capability::embed);
    return mean_pairwise_cosine(embed_batch(*slot.backend, in.images, slot.model_id, slot.retry, sink_));
  } catch (const BackendError& e) {
    throw EvalError(metric, std::string("backend failure: ") + e.what());
  } catch (const DomainError& e) {
    throw EvalError(metric, e.what());
  }
}

EvalReport Evaluator::evaluate(const EvalInput& in) const {
  EvalReport r;
  r.story_id = in.story.id;
  r.method_label = in.method_label;
  r.causal_mode = options_.causal_mode;
  r.readability_mapping = options_.readability_mapping;

  auto available = [&](const std::string& metric, std::initializer_list<const char*> roles) {
    for (const char* role : roles) {
      if (!backends_.has(role)) {
        r.flags.push_back("absent: " + metric + " (no " + role + " backend)");
        return false;
      }
    }
    return true;
  };
  auto guarded = [&](const std::string& metric, auto f) {
    try {
      f();
    } catch (const Error& e) {
      r.errors[metric] = e.what();
    }
  };

  if (available(kMetricInstanceConsistency, {"judge"})) {
    guarded(kMetricInstanceConsistency, [&] {
      const RatingResult x = instance_consistency(in);
      r.instance_consistency = x.value;
      r.evidence[kMetricInstanceConsistency] = {{"reply", x.reply}, {"attempts", x.attempts}};
    });
  }
  if (available(kMetricNarrativeCausality, {"vqa"})) {
    guarded(kMetricNarrativeCausality, [&] {
      r.event_scores = narrative_causality(in);
      r.narrative_causality = causal_score(r.event_scores);
      for (const auto& s : r.event_scores) {
        if (s.flagged) r.flags.push_back("event " + std::to_string(s.event_index) + " answer unusable; scored 0");
      }
    });
  }
  if (available(kMetricStoryReadability, {"captioner", "reader", "embedder"})) {
    guarded(kMetricStoryReadability, [&] {
      json ev;
      r.story_readability = story_readability(in, &ev);
      r.evidence[kMetricStoryReadability] = ev;
    });
  }
  if (available(kMetricAestheticQuality, {"aesthetic"})) {
    guarded(kMetricAestheticQuality, [&] {
      std::vector<double> per_image;
      r.aesthetic_quality = aesthetic_quality(in, &per_image);
      r.evidence[kMetricAestheticQuality] = {{"per_image", per_image}};
    });
  }
  if (available(kMetricStyleConsistency, {"image_embedder"})) {
    guarded(kMetricStyleConsistency, [&] { r.style_consistency = style_consistency(in); });
  }
  if (available(kMetricCharacterExpressiveness, {"judge"})) {
    guarded(kMetricCharacterExpressiveness, [&] {
      const RatingResult x = character_expressiveness(in);
      r.character_expressiveness = x.value;
      r.evidence[kMetricCharacterExpressiveness] = {{"reply", x.reply}, {"attempts", x.attempts}};
    });
  }
  return r;
}

// ---------------------------------------------------------------------------

std::vector<MethodSummary> summarize_reports(const std::vector<EvalReport>& reports) {
  std::vector<MethodSummary> rows;
  std::map<std::string, std::size_t> pos;
  std::vector<std::map<std::string, std::pair<double, std::size_t>>> sums;
  for (const auto& r : reports) {
    auto it = pos.find(r.method_label);
    if (it == pos.end()) {
      it = pos.emplace(r.method_label, rows.size()).first;
      rows.push_back({r.method_label, 0, {}});
      sums.emplace_back();
    }
    MethodSummary& row = rows[it->second];
    ++row.stories;
    for (const auto& m : metric_names()) {
      if (const auto v = r.metric(m)) {
        auto& [sum, n] = sums[it->second][m];
        sum += *v;
        ++n;
      }
    }
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const auto& m : metric_names()) {
      const auto f = sums[i].find(m);
      if (f == sums[i].end() || f->second.second == 0) {
        rows[i].means[m] = std::nullopt;
      } else {
        rows[i].means[m] = f->second.first / static_cast<double>(f->second.second);
      }
    }
  }
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

std::string summary_csv(const std::vector<MethodSummary>& rows) {
  std::ostringstream os;
  os << "method";
  for (const auto& m : metric_names()) os << "," << m;
  os << ",stories\n";
  os.precision(6);
  for (const auto& row : rows) {
    os << csv_field(row.method_label);
    for (const auto& m : metric_names()) {
      os << ",";
      const auto it = row.means.find(m);
      if (it != row.means.end() && it->second) os << *it->second;
    }
    os << "," << row.stories << "\n";
  }
  return os.str();
}

SubsetScores subset_scores(const std::vector<EvalReport>& reports, const SaturationPlan& plan) {
  SubsetScores out;
  for (std::size_t i = 0; i < plan.subsets.size(); ++i) {
    const std::set<std::int64_t> ids(plan.subsets[i].begin(), plan.subsets[i].end());
    const std::size_t size = plan.subset_sizes.at(i);
    std::map<std::string, std::map<std::string, std::pair<double, std::size_t>>> sums;
    std::map<std::string, std::set<std::int64_t>> seen;
    for (const auto& r : reports) {
      if (!ids.count(r.story_id)) continue;
      if (!seen[r.method_label].insert(r.story_id).second) {
        throw EvalError("saturation", "method " + r.method_label + " has two reports for story " +
                                          std::to_string(r.story_id));
      }
      for (const auto& m : metric_names()) {
        if (const auto v = r.metric(m)) {
          sums[r.method_label][m].first += *v;
          sums[r.method_label][m].second += 1;
        }
      }
    }
    for (const auto& [method, stories] : seen) {
      if (stories.size() != ids.size()) {
        throw EvalError("saturation", "method " + method + " lacks reports for subset size " + std::to_string(size));
      }
      for (const auto& [metric, acc] : sums[method]) {
        if (acc.second == ids.size()) out[size][method][metric] = acc.first / static_cast<double>(acc.second);
      }
      out[size][method];  // keep methods that report nothing
    }
  }
  // Drop metrics some method lacks at some size.
  std::set<std::string> keep(metric_names().begin(), metric_names().end());
  for (const auto& [_, by_method] : out) {
    for (const auto& [__, by_metric] : by_method) {
      for (auto it = keep.begin(); it != keep.end();) {
        it = by_metric.count(*it) ? std::next(it) : keep.erase(it);
      }
    }
  }
  for (auto& [_, by_method] : out) {
    for (auto& [__, by_metric] : by_method) {
      for (auto it = by_metric.begin(); it != by_metric.end();) {
        it = keep.count(it->first) ? std::next(it) : by_metric.erase(it);
      }
    }
  }
  return out;
}

std::vector<EvalReport> read_reports_jsonl(const std::filesystem::path& path) {
  const std::string content = read_file_bytes(path);
  std::vector<EvalReport> out;
  int lineno = 0;
  for (const auto& line : text::split_lines(content)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<EvalReport>());
    } catch (const std::exception& e) {
      throw EvalError("input", path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace logistory
