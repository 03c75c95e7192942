#pragma once

#include <set>
#include <string>
#include <vector>

#include "logistory/backends.hpp"
#include "logistory/causal_graph.hpp"
#include "logistory/predicates.hpp"
#include "logistory/prompt_template.hpp"

namespace logistory {

class VerifierError : public Error {
 public:
  using Error::Error;
};

struct RecorderEntry {
  int panel_index = 0;
  std::vector<int> events;
  std::vector<StatePredicate> applied;
};

// Tracks which events have been depicted and the resulting world state.
class StateRecorder {
 public:
  StateRecorder() = default;
  // Initial state is the first event's preconditions.
  explicit StateRecorder(std::vector<KeyEvent> events);

  // Applies the effects of `event_indices` in order. Throws VerifierError for
  // an unknown index or an event already realized; the recorder is unchanged
  // on error.
  void apply_effects(const std::vector<int>& event_indices, int panel_index = 0);

  const StateSet& current() const { return current_; }
  const std::set<int>& realized_events() const { return realized_; }
  const std::vector<RecorderEntry>& history() const { return history_; }
  const StateSet& initial() const { return initial_; }
  const std::vector<KeyEvent>& events() const { return events_; }

  // Rebuilds the state from the initial state and history.
  StateSet replay() const;

 private:
  const KeyEvent& event(int index) const;

  std::vector<KeyEvent> events_;
  StateSet initial_;
  StateSet current_;
  std::set<int> realized_;
  std::vector<RecorderEntry> history_;
};

enum class Verdict { aligned, misaligned };
std::string_view to_string(Verdict v);

struct Contradiction {
  StatePredicate expected;
  StatePredicate observed;
};

struct RefinementInstruction {
  int panel_index = 0;
  Verdict verdict = Verdict::aligned;
  std::vector<StatePredicate> missing;
  std::vector<Contradiction> contradicting;
  std::string instruction_text;
  std::string instruction_source;  // "backend", "fallback" or empty
};

void to_json(json& j, const RefinementInstruction& r);

// State a panel is expected to show: the recorder's current predicates about
// entities involved in the panel (its characters, objects, and the actors,
// targets and effect subjects of its events), overridden by the effects of
// the events it covers.
StateSet expected_state(const StateRecorder& recorder, const PanelSpec& panel, const std::vector<KeyEvent>& events);

// Loose predicate comparison used for noisy captions: attributes must agree;
// entities and values match when normalized equal or when at least half of
// the expected side's content words occur on the observed side.
bool entity_matches(const std::string& expected, const std::string& observed);
bool value_matches(const std::string& expected, const std::string& observed);

// Pure verdict. Missing = expected predicates with no matching observation
// (notes count as present when half of their content words occur in the
// observations); contradicting = observations with the same (entity,
// attribute) as a single-valued expected predicate but a different value.
RefinementInstruction verify_panel(const CausalGraph& g, const StateRecorder& recorder, const PanelSpec& panel,
                                   const std::vector<StatePredicate>& observed, const std::vector<KeyEvent>& events);

// "Add: ...; Fix: ... instead of ...", empty for an aligned verdict.
std::string fallback_instruction(const RefinementInstruction& r);

struct InstructionContext {
  const BackendRegistry* backends = nullptr;  // "verifier" role; may be null
  const TemplateLibrary* templates = nullptr;
  std::string caption;
  AttemptSink sink;
};

// Fills instruction_text for a misaligned verdict. Uses the refinement
// template on the verifier backend; any backend failure or empty reply falls
// back to fallback_instruction. The verdict and lists are never changed.
void render_instruction(RefinementInstruction& r, const CausalGraph& g, const StateRecorder& recorder,
                        const PanelSpec& panel, const std::vector<KeyEvent>& events, const InstructionContext& ctx);

// Compact textual graph for prompts: one line per edge.
std::string describe_graph(const CausalGraph& g, const std::vector<KeyEvent>& events);

}  // namespace logistory
