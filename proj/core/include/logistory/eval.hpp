#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "logistory/backends.hpp"
#include "logistory/dataset.hpp"
#include "logistory/domain.hpp"
#include "logistory/prompt_template.hpp"
#include "logistory/stats.hpp"

namespace logistory {

class EvalError : public Error {
 public:
  EvalError(std::string metric, const std::string& message)
      : Error(metric + ": " + message), metric_(std::move(metric)) {}
  const std::string& metric() const { return metric_; }

 private:
  std::string metric_;
};

// Metric keys, in summary-table column order.
inline constexpr const char* kMetricInstanceConsistency = "instance_consistency";
inline constexpr const char* kMetricNarrativeCausality = "narrative_causality";
inline constexpr const char* kMetricStoryReadability = "story_readability";
inline constexpr const char* kMetricAestheticQuality = "aesthetic_quality";
inline constexpr const char* kMetricStyleConsistency = "style_consistency";
inline constexpr const char* kMetricCharacterExpressiveness = "character_expressiveness";
const std::vector<std::string>& metric_names();

enum class CausalMode { vqa_binary, rubric_0_1 };
std::string_view to_string(CausalMode m);
CausalMode parse_causal_mode(std::string_view s);

enum class ReadabilityMapping { affine, raw_clamped };  // (x+1)/2 or max(0, x)
std::string_view to_string(ReadabilityMapping m);
ReadabilityMapping parse_readability_mapping(std::string_view s);

struct EventScore {
  int event_index = 0;  // 1-based position in causal_event_chain
  CausalMode mode = CausalMode::vqa_binary;
  double value = 0.0;
  double weight = 0.0;
  std::string question;
  std::string answer;
  bool flagged = false;  // reply unusable after a re-prompt; scored 0

  bool operator==(const EventScore&) const = default;
};

void to_json(json& j, const EventScore& e);
void from_json(const json& j, EventScore& e);

struct EvalReport {
  std::int64_t story_id = 0;
  std::string method_label;
  std::optional<double> instance_consistency;
  std::optional<double> narrative_causality;
  std::optional<double> story_readability;
  std::optional<double> aesthetic_quality;
  std::optional<double> style_consistency;
  std::optional<double> character_expressiveness;
  CausalMode causal_mode = CausalMode::vqa_binary;
  ReadabilityMapping readability_mapping = ReadabilityMapping::affine;
  std::vector<EventScore> event_scores;
  json evidence = json::object();  // per metric
  std::vector<std::string> flags;
  std::map<std::string, std::string> errors;  // metric -> failure message

  std::optional<double> metric(const std::string& name) const;
  bool operator==(const EvalReport&) const = default;
};

void to_json(json& j, const EvalReport& r);
void from_json(const json& j, EvalReport& r);

// ---------------------------------------------------------------------------
// Parsers

// Leading rating 1-5 (half points allowed), optionally followed by
// "- <label>" or "/5"; "Score: N" and "Rating: N" prefixes accepted.
std::optional<double> parse_rating(const std::string& reply);
std::optional<bool> parse_yes_no(const std::string& reply);
// Clarity/Coherence/Plausibility lines, each in [0,1]; returns their mean.
std::optional<double> parse_rubric(const std::string& reply);
// First decimal number in the reply.
std::optional<double> parse_number(const std::string& reply);

// ---------------------------------------------------------------------------
// Pure arithmetic

double causal_score(const std::vector<EventScore>& scores);  // sum of value * weight
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);
double mean_pairwise_cosine(const std::vector<std::vector<double>>& vectors);
double map_readability(double cosine, ReadabilityMapping mapping);

// ---------------------------------------------------------------------------
// Evaluation over a sequence of final images

struct EvalInput {
  StoryRecord story;
  std::vector<ImageRef> images;  // panel order
  std::string method_label;
};

// Final images of a run directory: final/p<t>.<ext>, t = 1..T contiguous.
std::vector<ImageRef> load_final_images(const std::filesystem::path& run_dir);

struct EvalOptions {
  CausalMode causal_mode = CausalMode::vqa_binary;
  ReadabilityMapping readability_mapping = ReadabilityMapping::affine;
};

EvalOptions eval_options_from_json(const json& j);

struct RatingResult {
  double value = 0.0;
  std::string reply;
  int attempts = 1;
};

class Evaluator {
 public:
  Evaluator(const BackendRegistry& backends, const TemplateLibrary& templates, EvalOptions options = {},
            AttemptSink sink = {});

  RatingResult instance_consistency(const EvalInput& in) const;      // role "judge"
  RatingResult character_expressiveness(const EvalInput& in) const;  // role "judge"
  std::vector<EventScore> narrative_causality(const EvalInput& in) const;  // role "vqa"
  // Roles "captioner", "reader" and "embedder". Evidence receives the
  // captions, inferred story and raw cosine.
  double story_readability(const EvalInput& in, json* evidence = nullptr) const;
  double aesthetic_quality(const EvalInput& in, std::vector<double>* per_image = nullptr) const;  // "aesthetic"
  double style_consistency(const EvalInput& in) const;  // "image_embedder"

  // All six; metrics whose backends are missing are null and flagged.
  EvalReport evaluate(const EvalInput& in) const;

 private:
  RatingResult rating(const EvalInput& in, const std::string& metric, const std::string& template_name) const;

  const BackendRegistry& backends_;
  const TemplateLibrary& templates_;
  EvalOptions options_;
  AttemptSink sink_;
};

// ---------------------------------------------------------------------------
// Batch summaries

struct MethodSummary {
  std::string method_label;
  std::size_t stories = 0;
  std::map<std::string, std::optional<double>> means;  // null when no story had the metric
};

// Per-method means in first-appearance order of method labels.
std::vector<MethodSummary> summarize_reports(const std::vector<EvalReport>& reports);
std::string summary_csv(const std::vector<MethodSummary>& rows);

// Per-subset method means for the saturation analysis. Only metrics that
// every method reports on every story of the subset are kept.
SubsetScores subset_scores(const std::vector<EvalReport>& reports, const SaturationPlan& plan);

std::vector<EvalReport> read_reports_jsonl(const std::filesystem::path& path);

}  // namespace logistory
