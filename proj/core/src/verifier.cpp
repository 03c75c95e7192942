#include "logistory/verifier.hpp"

#include <algorithm>

#include "logistory/planner.hpp"
#include "logistory/planner_parsers.hpp"
#include "logistory/text.hpp"

namespace logistory {

StateRecorder::StateRecorder(std::vector<KeyEvent> events) : events_(std::move(events)) {
  if (!events_.empty()) initial_.apply(events_.front().preconditions);
  current_ = initial_;
}

const KeyEvent& StateRecorder::event(int index) const {
  for (const auto& e : events_) {
    if (e.index == index) return e;
  }
  throw VerifierError("unknown event index " + std::to_string(index));
}

void StateRecorder::apply_effects(const std::vector<int>& event_indices, int panel_index) {
  std::set<int> batch;
  for (int k : event_indices) {
    event(k);
    if (realized_.count(k) || !batch.insert(k).second) {
      throw VerifierError("event " + std::to_string(k) + " is already realized");
    }
  }
  RecorderEntry entry;
  entry.panel_index = panel_index;
  entry.events = event_indices;
  for (int k : event_indices) {
    const auto& effects = event(k).effects;
    current_.apply(effects);
    entry.applied.insert(entry.applied.end(), effects.begin(), effects.end());
    realized_.insert(k);
  }
  history_.push_back(std::move(entry));
}

StateSet StateRecorder::replay() const {
  StateSet s = initial_;
  for (const auto& h : history_) s.apply(h.applied);
  return s;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Verdict v) { return v == Verdict::aligned ? "aligned" : "misaligned"; }

void to_json(json& j, const RefinementInstruction& r) {
  json contradictions = json::array();
  for (const auto& c : r.contradicting) contradictions.push_back({{"expected", c.expected}, {"observed", c.observed}});
  j = json{{"panel_index", r.panel_index},
           {"verdict", to_string(r.verdict)},
           {"missing", r.missing},
           {"contradicting", contradictions},
           {"instruction_text", r.instruction_text}};
  if (!r.instruction_source.empty()) j["instruction_source"] = r.instruction_source;
}

namespace {

bool half_covered(const std::string& expected, const std::string& observed) {
  if (text::normalize(expected) == text::normalize(observed)) return true;
  const auto want = text::content_words(expected);
  if (want.empty()) return false;
  const auto have = text::content_words(observed);
  std::size_t hit = 0;
  for (const auto& w : want) {
    if (std::find(have.begin(), have.end(), w) != have.end()) ++hit;
  }
  return 2 * hit >= want.size();
}

std::string canonical_entity(const std::string& s) { return canonical_name(s); }

}  // namespace

bool entity_matches(const std::string& expected, const std::string& observed) {
  if (canonical_entity(expected) == canonical_entity(observed)) return true;
  return half_covered(expected, observed);
}

bool value_matches(const std::string& expected, const std::string& observed) {
  return half_covered(expected, observed);
}

StateSet expected_state(const StateRecorder& recorder, const PanelSpec& panel, const std::vector<KeyEvent>& events) {
  std::vector<std::string> involved(panel.characters_present.begin(), panel.characters_present.end());
  involved.insert(involved.end(), panel.objects_present.begin(), panel.objects_present.end());
  std::vector<const KeyEvent*> covered;
  for (int k : panel.events) {
    for (const auto& e : events) {
      if (e.index != k) continue;
      covered.push_back(&e);
      for (const auto& a : actor_names(e)) involved.push_back(a);
      if (!e.target.empty()) involved.push_back(e.target);
      for (const auto& p : e.effects) {
        if (!is_note(p)) involved.push_back(p.entity);
      }
    }
  }
  StateSet out;
  for (const auto& p : recorder.current().predicates()) {
    if (is_note(p)) continue;
    const bool relevant = std::any_of(involved.begin(), involved.end(), [&](const std::string& name) {
      return canonical_entity(name) == canonical_entity(p.entity);
    });
    if (relevant) out.apply(p);
  }
  for (const KeyEvent* e : covered) out.apply(e->effects);
  return out;
}

RefinementInstruction verify_panel(const CausalGraph& /*g*/, const StateRecorder& recorder, const PanelSpec& panel,
                                   const std::vector<StatePredicate>& observed, const std::vector<KeyEvent>& events) {
  RefinementInstruction r;
  r.panel_index = panel.index;
  std::string observed_text;
  for (const auto& o : observed) observed_text += describe_predicate(o) + ". ";

  for (const auto& exp : expected_state(recorder, panel, events).predicates()) {
    if (is_note(exp)) {
      if (!half_covered(exp.value, observed_text)) r.missing.push_back(exp);
      continue;
    }
    const std::string attr = text::normalize(exp.attribute);
    bool present = false;
    std::vector<const StatePredicate*> conflicts;
    for (const auto& o : observed) {
      if (is_note(o) || text::normalize(o.attribute) != attr || !entity_matches(exp.entity, o.entity)) continue;
      if (value_matches(exp.value, o.value)) {
        present = true;
      } else if (!is_multi_valued_attribute(attr)) {
        conflicts.push_back(&o);
      }
    }
    if (present) continue;
    r.missing.push_back(exp);
    for (const auto* c : conflicts) r.contradicting.push_back({exp, *c});
  }
  r.verdict = r.missing.empty() && r.contradicting.empty() ? Verdict::aligned : Verdict::misaligned;
  return r;
}

std::string fallback_instruction(const RefinementInstruction& r) {
  if (r.verdict == Verdict::aligned) return {};
  std::vector<std::string> add, fix;
  for (const auto& m : r.missing) {
    const bool contradicted = std::any_of(r.contradicting.begin(), r.contradicting.end(),
                                          [&](const Contradiction& c) { return c.expected == m; });
    if (!contradicted) add.push_back(describe_predicate(m));
  }
  for (const auto& c : r.contradicting) {
    fix.push_back("show " + describe_predicate(c.expected) + " instead of " + describe_predicate(c.observed));
  }
  std::vector<std::string> parts;
  if (!add.empty()) parts.push_back("Add: " + text::join(add, "; "));
  if (!fix.empty()) parts.push_back("Fix: " + text::join(fix, "; "));
  return text::join(parts, ". ") + ".";
}

std::string describe_graph(const CausalGraph& g, const std::vector<KeyEvent>& events) {
  std::string out;
  for (const auto& e : g.edges()) {
    std::string what = "event " + std::to_string(e.event);
    for (const auto& k : events) {
      if (k.index == e.event) what = format_event_tuple(k);
    }
    out += "[" + g.node(e.from).label + "] --" + what + "--> [" + g.node(e.to).label + "]\n";
  }
  return text::trim(out);
}

void render_instruction(RefinementInstruction& r, const CausalGraph& g, const StateRecorder& recorder,
                        const PanelSpec& panel, const std::vector<KeyEvent>& events, const InstructionContext& ctx) {
  if (r.verdict == Verdict::aligned) {
    r.instruction_text.clear();
    r.instruction_source.clear();
    return;
  }
  if (ctx.backends && ctx.templates && ctx.backends->has("verifier")) {
    std::vector<std::string> state, expected, missing, contradicting;
    for (const auto& p : recorder.current().predicates()) state.push_back(describe_predicate(p));
    for (int k : panel.events) {
      for (const auto& e : events) {
        if (e.index == k) expected.push_back(format_event_tuple(e));
      }
    }
    if (expected.empty()) expected.push_back(panel.scene_description);
    for (const auto& m : r.missing) missing.push_back(describe_predicate(m));
    for (const auto& c : r.contradicting) {
      contradicting.push_back(describe_predicate(c.observed) + " (expected " + describe_predicate(c.expected) + ")");
    }
    try {
      BackendRequest req;
      req.capability = Capability::chat;
      req.payload = {{"template", "refinement"},
                     {"panel", panel.index},
                     {"prompt", ctx.templates->get("refinement")
                                    .render({{"graph", describe_graph(g, events)},
                                             {"state", state.empty() ? "(empty)" : text::join(state, "; ")},
                                             {"caption", ctx.caption},
                                             {"expected", text::join(expected, "; ")},
                                             {"missing", missing.empty() ? "none" : text::join(missing, "; ")},
                                             {"contradicting",
                                              contradicting.empty() ? "none" : text::join(contradicting, "; ")}})}};
      std::string reply = text::trim(ctx.backends->call("verifier", req, ctx.sink).text);
      if (text::starts_with_ci(reply, "instruction:")) reply = text::trim(reply.substr(12));
      reply = text::unquote(reply);
      if (!reply.empty()) {
        r.instruction_text = reply;
        r.instruction_source = "backend";
        return;
      }
    } catch (const BackendError&) {
    } catch (const TemplateError&) {
    }
  }
  r.instruction_text = fallback_instruction(r);
  r.instruction_source = "fallback";
}

}  // namespace logistory
