#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "logistory/backends.hpp"
#include "logistory/causal_graph.hpp"
#include "logistory/monitor.hpp"
#include "logistory/planner.hpp"
#include "logistory/prompt_template.hpp"
#include "logistory/run_store.hpp"
#include "logistory/verifier.hpp"

namespace logistory {

struct RefinementPolicy {
  double tau1 = 0.4;
  double tau2 = 0.7;
  int max_regenerations = 2;
  int max_edits = 2;

  void validate() const;  // throws DomainError
};

void to_json(json& j, const RefinementPolicy& p);
void from_json(const json& j, RefinementPolicy& p);  // validates; unknown keys rejected

enum class Branch { regenerate, edit, accept };
std::string_view to_string(Branch b);

// psi < tau1 regenerates, tau1 <= psi < tau2 edits, psi >= tau2 accepts.
Branch decide(double psi, const RefinementPolicy& policy);

struct RunResult {
  std::string run_id;
  std::int64_t story_id = 0;
  std::vector<PanelImage> images;  // final revisions, one per panel
  std::vector<TraceEvent> trace;
  PlanBundle plan;
  std::vector<json> flags;
  bool complete = false;
};

json run_summary_json(const RunResult& r);

struct PipelineOptions {
  RefinementPolicy policy;
  PlannerOptions planner;
  std::size_t memory_chars = kDefaultMemoryChars;
  std::string config_hash;  // recorded in run.json; computed from the registry when empty
};

PipelineOptions pipeline_options_from_json(const json& j);

// Hash of role -> model id bindings plus the policy.
std::string config_fingerprint(const BackendRegistry& backends, const RefinementPolicy& policy);

// Roles run_story cannot do without.
const std::vector<std::string>& required_pipeline_roles();

class StoryPipeline {
 public:
  StoryPipeline(const BackendRegistry& backends, const TemplateLibrary& templates, PipelineOptions options = {});

  // Fails if out_dir already holds a run. A backend or monitor failure
  // leaves the directory resumable and rethrows.
  RunResult run(const StoryRecord& story, const std::filesystem::path& out_dir);
  RunResult resume(const std::filesystem::path& out_dir);

 private:
  struct State;

  void check_roles() const;
  void execute(State& st);
  void process_panel(State& st, const PanelSpec& panel, int first_revision);
  void record(State& st, TraceEvent e);
  PanelImage render(State& st, const PanelSpec& panel, int revision, const std::string& negative);
  PanelImage edit(State& st, const PanelImage& current, const std::string& instruction, int revision);
  void finish_panel(State& st, const PanelSpec& panel, const std::string& caption);
  RunResult result_of(const State& st) const;

  const BackendRegistry& backends_;
  const TemplateLibrary& templates_;
  PipelineOptions options_;
};

RunResult run_story(const StoryRecord& story, const RefinementPolicy& policy, const BackendRegistry& backends,
                    const std::filesystem::path& out_dir);
RunResult resume_run(const std::filesystem::path& out_dir, const BackendRegistry& backends);

// Threshold calibration against human ratings: tau1 is the 90th percentile
// of psi over panels rated below 2, tau2 the 10th percentile over panels
// rated above 4 (linear interpolation between order statistics).
struct CalibrationSample {
  double psi = 0.0;
  double rating = 0.0;
};

struct ThresholdCalibration {
  double tau1 = 0.0;
  double tau2 = 0.0;
  std::size_t low_count = 0;
  std::size_t high_count = 0;
};

ThresholdCalibration calibrate_thresholds(const std::vector<CalibrationSample>& samples);
double percentile(std::vector<double> values, double q);  // q in [0, 100]

}  // namespace logistory
