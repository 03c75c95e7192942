#include "logistory/planner.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "logistory/predicates.hpp"
#include "logistory/text.hpp"

namespace logistory {

namespace {

std::string mention_key(std::string_view s) {
  std::string t = text::normalize(s);
  for (std::size_t pos; (pos = t.find("\xE2\x80\x99")) != std::string::npos;) t.replace(pos, 3, "'");
  return t;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

bool contains_phrase(const std::string& hay, const std::string& needle) {
  if (needle.empty()) return false;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
    const bool left = pos == 0 || !word_char(hay[pos - 1]);
    const std::size_t end = pos + needle.size();
    const bool right = end == hay.size() || !word_char(hay[end]);
    if (left && right) return true;
  }
  return false;
}

// "pig" for "pig1" / "pig 2"; empty otherwise.
std::string numbered_stem(const std::string& canon) {
  std::size_t end = canon.size();
  while (end > 0 && std::isdigit(static_cast<unsigned char>(canon[end - 1]))) --end;
  if (end == canon.size() || end == 0) return {};
  std::string stem = canon.substr(0, end);
  while (!stem.empty() && stem.back() == ' ') stem.pop_back();
  return stem;
}

const std::vector<EntityDef>& list_of(const EntitySet& set, EntityKind kind) {
  switch (kind) {
    case EntityKind::character: return set.characters;
    case EntityKind::object: return set.objects;
    case EntityKind::scene: return set.scenes;
  }
  return set.characters;
}

std::string with_feedback(const std::string& prompt, const std::string& error) {
  return prompt + "\n\nYour previous reply could not be used: " + error +
         "\nReply again with the complete answer in the required format.";
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<std::string> resolve_entity_phrase(const std::string& phrase, const EntitySet& entities) {
  const std::vector<std::string> parts = resolve_subjects(text::trim(phrase), &entities);
  if (parts.empty()) return {};
  std::vector<std::string> out;
  for (const auto& p : parts) {
    const EntityDef* e = entities.find(p);
    if (!e) return {};
    if (std::find(out.begin(), out.end(), e->name) == out.end()) out.push_back(e->name);
  }
  return out;
}

std::vector<std::string> mentioned_entities(const std::string& raw, const EntitySet& entities, EntityKind kind) {
  const std::string hay = mention_key(raw);
  std::vector<std::string> out;
  for (const auto& e : list_of(entities, kind)) {
    const std::string canon = mention_key(canonical_name(e.name));
    bool hit = contains_phrase(hay, canon);
    if (!hit) {
      const std::string stem = numbered_stem(canon);
      hit = !stem.empty() && (contains_phrase(hay, stem + "s") || contains_phrase(hay, stem + "es"));
    }
    if (hit) out.push_back(e.name);
  }
  return out;
}

std::vector<std::string> actor_names(const KeyEvent& e) {
  std::vector<std::string> out;
  std::string rest = e.actor;
  for (std::size_t pos; (pos = rest.find(" and ")) != std::string::npos;) {
    out.push_back(text::trim(rest.substr(0, pos)));
    rest = rest.substr(pos + 5);
  }
  out.push_back(text::trim(rest));
  return out;
}

void derive_event_predicates(KeyEvent& e, const EntitySet& entities) {
  e.preconditions = extract_predicates(e.preconditions_text, &entities);
  StateSet effects(extract_predicates(e.effects_text, &entities));
  effects.apply(extract_predicates(e.result, &entities));
  e.effects = effects.predicates();
}

std::map<int, std::vector<int>> assign_event_coverage(std::vector<PanelSpec>& panels, int event_count,
                                                      std::vector<std::string>& warnings) {
  std::map<int, std::vector<int>> coverage;
  for (int j = 1; j <= event_count; ++j) coverage[j];
  const bool explicit_refs =
      std::any_of(panels.begin(), panels.end(), [](const PanelSpec& p) { return !p.events.empty(); });
  const int T = static_cast<int>(panels.size());
  if (!explicit_refs) {
    for (auto& p : panels) p.events.clear();
    for (int j = 1; j <= event_count; ++j) {
      const int t = T == event_count ? j : static_cast<int>((static_cast<long long>(j - 1) * T) / event_count) + 1;
      panels[static_cast<std::size_t>(t - 1)].events.push_back(j);
    }
  }
  for (const auto& p : panels) {
    for (int j : p.events) coverage[j].push_back(p.index);
  }
  for (const auto& [j, ps] : coverage) {
    if (ps.empty()) warnings.push_back("event " + std::to_string(j) + " is not depicted by any panel");
  }
  return coverage;
}

// ---------------------------------------------------------------------------

StoryPlanner::StoryPlanner(const BackendRegistry& backends, const TemplateLibrary& templates, PlannerOptions options,
                           AttemptSink sink)
    : backends_(backends), templates_(templates), options_(options), sink_(std::move(sink)) {}

template <typename Parse>
auto StoryPlanner::run_stage(const std::string& stage, const std::string& prompt, Parse parse)
    -> decltype(parse(std::string())) {
  std::string current = prompt;
  std::string last_error;
  for (int attempt = 1; attempt <= options_.parse_retries + 1; ++attempt) {
    BackendRequest req;
    req.capability = Capability::chat;
    req.payload = {{"prompt", current}, {"template", stage == "craft" ? "scenecrafter" : stage == "mine" ? "logicminer" : "shotplanner"}};
    if (attempt > 1) req.payload["reprompt"] = attempt - 1;
    BackendResponse resp;
    try {
      resp = backends_.call("planner", req, sink_);
    } catch (const BackendError& e) {
      transcripts_.push_back({stage, attempt, current, "", e.what()});
      throw PlanningError(stage, e.what());
    }
    AgentTranscript t{stage, attempt, current, resp.text, ""};
    try {
      auto result = parse(resp.text);
      transcripts_.push_back(std::move(t));
      return result;
    } catch (const ParseError& e) {
      last_error = e.what();
      t.error = last_error;
      transcripts_.push_back(std::move(t));
      current = with_feedback(prompt, last_error);
    }
  }
  throw PlanningError(stage, last_error);
}

EntitySet StoryPlanner::craft_entities(const StoryRecord& story) {
  if (text::trim(story.story_outline).empty()) throw PlanningError("craft", "story_outline is empty");
  const std::string prompt = templates_.get("scenecrafter").render({{"story", story.story_outline}});
  ParsedEntities parsed = run_stage("craft", prompt, [](const std::string& reply) { return parse_entities_reply(reply); });
  for (auto& w : parsed.warnings) warnings_.push_back("craft: " + w);
  return parsed.entities;
}

std::vector<KeyEvent> StoryPlanner::mine_events(const StoryRecord& story, const EntitySet& entities) {
  const std::string prompt = templates_.get("logicminer")
                                 .render({{"story", story.story_outline},
                                          {"entities", format_entities_for_prompt(entities)}});
  return run_stage("mine", prompt, [&](const std::string& reply) {
    std::vector<KeyEvent> events = parse_events_reply(reply);
    for (auto& e : events) {
      const auto actors = resolve_entity_phrase(e.actor, entities);
      if (actors.empty()) {
        throw ParseError("event " + std::to_string(e.index) + ": actor '" + e.actor +
                         "' is not one of the listed entities");
      }
      e.actor = text::join(actors, " and ");
      if (const auto targets = resolve_entity_phrase(e.target, entities); !targets.empty()) {
        e.target = text::join(targets, " and ");
      }
      derive_event_predicates(e, entities);
    }
    return events;
  });
}

std::vector<PanelSpec> StoryPlanner::plan_shots(const StoryRecord& story, const std::vector<KeyEvent>& events,
                                                const EntitySet& entities) {
  if (events.empty()) throw PlanningError("shot", "no events to plan");
  const std::string prompt = templates_.get("shotplanner")
                                 .render({{"story", story.story_outline},
                                          {"entities", format_entities_for_prompt(entities)},
                                          {"events", format_events_for_prompt(events)}});
  std::vector<std::string> stage_warnings;
  std::vector<PanelSpec> panels = run_stage("shot", prompt, [&](const std::string& reply) {
    stage_warnings.clear();
    std::vector<PanelSpec> out;
    for (auto& shot : parse_shots_reply(reply)) {
      PanelSpec p = std::move(shot.spec);
      const std::string where = "shot " + std::to_string(p.index) + ": ";
      if (!shot.characters_text.empty() || !shot.objects_text.empty()) {
        p.characters_present =
            mentioned_entities(shot.characters_text + " " + p.scene_description, entities, EntityKind::character);
        p.objects_present = mentioned_entities(shot.objects_text, entities, EntityKind::object);
      } else {
        std::vector<std::string> chars;
        for (const auto& c : p.characters_present) {
          const auto names = resolve_entity_phrase(c, entities);
          if (names.empty()) throw ParseError(where + "character '" + c + "' is not one of the listed entities");
          for (const auto& n : names) {
            if (std::find(chars.begin(), chars.end(), n) == chars.end()) chars.push_back(n);
          }
        }
        p.characters_present = std::move(chars);
        std::vector<std::string> objs;
        for (const auto& o : p.objects_present) {
          const EntityDef* e = entities.find(o);
          if (!e) {
            stage_warnings.push_back(where + "dropped unknown object '" + o + "'");
            continue;
          }
          if (std::find(objs.begin(), objs.end(), e->name) == objs.end()) objs.push_back(e->name);
        }
        p.objects_present = std::move(objs);
      }
      for (int j : p.events) {
        if (j < 1 || j > static_cast<int>(events.size())) {
          throw ParseError(where + "refers to event " + std::to_string(j) + " but there are " +
                           std::to_string(events.size()) + " events");
        }
      }
      out.push_back(std::move(p));
    }
    return out;
  });
  for (auto& w : stage_warnings) warnings_.push_back("shot: " + w);
  std::vector<std::string> coverage_warnings;
  coverage_ = assign_event_coverage(panels, static_cast<int>(events.size()), coverage_warnings);
  for (auto& w : coverage_warnings) warnings_.push_back("shot: " + w);
  return panels;
}

PlanBundle StoryPlanner::plan(const StoryRecord& story) {
  transcripts_.clear();
  warnings_.clear();
  coverage_.clear();
  PlanBundle bundle;
  bundle.entities = craft_entities(story);
  bundle.events = mine_events(story, bundle.entities);
  bundle.panels = plan_shots(story, bundle.events, bundle.entities);
  bundle.coverage = coverage_;
  bundle.warnings = warnings_;
  bundle.transcripts = transcripts_;
  return bundle;
}

// ---------------------------------------------------------------------------

void to_json(json& j, const AgentTranscript& t) {
  j = json{{"stage", t.stage}, {"attempt", t.attempt}, {"prompt", t.prompt}, {"reply", t.reply}};
  if (!t.error.empty()) j["error"] = t.error;
}

void from_json(const json& j, AgentTranscript& t) {
  t.stage = j.at("stage").get<std::string>();
  t.attempt = j.at("attempt").get<int>();
  t.prompt = j.value("prompt", std::string());
  t.reply = j.value("reply", std::string());
  t.error = j.value("error", std::string());
}

void to_json(json& j, const PlanBundle& b) {
  json coverage = json::object();
  for (const auto& [e, ps] : b.coverage) coverage[std::to_string(e)] = ps;
  j = json{{"entities", b.entities}, {"events", b.events},     {"panels", b.panels},
           {"coverage", coverage},   {"warnings", b.warnings}, {"transcripts", b.transcripts}};
}

void from_json(const json& j, PlanBundle& b) {
  b.entities = j.at("entities").get<EntitySet>();
  b.events = j.at("events").get<std::vector<KeyEvent>>();
  b.panels = j.at("panels").get<std::vector<PanelSpec>>();
  b.coverage.clear();
  const json coverage = j.value("coverage", json::object());
  for (const auto& [k, v] : coverage.items()) {
    b.coverage[std::stoi(k)] = v.get<std::vector<int>>();
  }
  b.warnings = j.value("warnings", std::vector<std::string>{});
  b.transcripts = j.value("transcripts", std::vector<AgentTranscript>{});
}

}  // namespace logistory
