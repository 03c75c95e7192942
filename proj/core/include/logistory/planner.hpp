#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "logistory/backends.hpp"
#include "logistory/domain.hpp"
#include "logistory/planner_parsers.hpp"
#include "logistory/prompt_template.hpp"

namespace logistory {

class PlanningError : public Error {
 public:
  PlanningError(std::string stage, const std::string& message)
      : Error("planning failed at " + stage + ": " + message), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }  // "craft", "mine" or "shot"

 private:
  std::string stage_;
};

struct AgentTranscript {
  std::string stage;
  int attempt = 0;
  std::string prompt;
  std::string reply;
  std::string error;  // parse or resolution error that triggered a re-prompt
};

struct PlanBundle {
  EntitySet entities;
  std::vector<KeyEvent> events;
  std::vector<PanelSpec> panels;
  std::map<int, std::vector<int>> coverage;  // event index -> panel indices
  std::vector<std::string> warnings;
  std::vector<AgentTranscript> transcripts;
};

void to_json(json& j, const AgentTranscript& t);
void from_json(const json& j, AgentTranscript& t);
void to_json(json& j, const PlanBundle& b);
void from_json(const json& j, PlanBundle& b);

struct PlannerOptions {
  int parse_retries = 2;  // re-prompts after the first reply
};

// Resolves an actor phrase ("Wolf ", "Pig1 and Pig2", "the pigs") to entity
// names. Empty when any part fails to resolve.
std::vector<std::string> resolve_entity_phrase(const std::string& phrase, const EntitySet& entities);
// Entity names of `kind` mentioned as whole words in `text`, in entity order.
std::vector<std::string> mentioned_entities(const std::string& text, const EntitySet& entities, EntityKind kind);
// Splits an actor field written by the planner back into entity names.
std::vector<std::string> actor_names(const KeyEvent& e);

// Fills preconditions/effects predicates from the event's text fields.
void derive_event_predicates(KeyEvent& e, const EntitySet& entities);

// Explicit panel->event references win; otherwise panels and events pair
// 1:1 when counts match, else event j goes to panel floor((j-1)*T/J)+1.
std::map<int, std::vector<int>> assign_event_coverage(std::vector<PanelSpec>& panels, int event_count,
                                                      std::vector<std::string>& warnings);

// The three planning agents. Each stage is a templated backend call on the
// "planner" role followed by parsing; parse and resolution failures are fed
// back in a re-prompt up to `parse_retries` times.
class StoryPlanner {
 public:
  StoryPlanner(const BackendRegistry& backends, const TemplateLibrary& templates, PlannerOptions options = {},
               AttemptSink sink = {});

  EntitySet craft_entities(const StoryRecord& story);
  std::vector<KeyEvent> mine_events(const StoryRecord& story, const EntitySet& entities);
  std::vector<PanelSpec> plan_shots(const StoryRecord& story, const std::vector<KeyEvent>& events,
                                    const EntitySet& entities);
  PlanBundle plan(const StoryRecord& story);

  const std::vector<AgentTranscript>& transcripts() const { return transcripts_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::map<int, std::vector<int>>& last_coverage() const { return coverage_; }

 private:
  template <typename Parse>
  auto run_stage(const std::string& stage, const std::string& prompt, Parse parse) -> decltype(parse(std::string()));

  const BackendRegistry& backends_;
  const TemplateLibrary& templates_;
  PlannerOptions options_;
  AttemptSink sink_;
  std::vector<AgentTranscript> transcripts_;
  std::vector<std::string> warnings_;
  std::map<int, std::vector<int>> coverage_;
};

}  // namespace logistory
