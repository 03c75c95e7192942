#pragma once

#include <optional>
#include <string>
#include <vector>

#include "logistory/domain.hpp"

namespace logistory {

class ParseError : public Error {
 public:
  using Error::Error;
};

// First ```json fenced block, else the first bare {...} span that parses.
std::optional<json> extract_json_block(const std::string& reply);

struct ParsedEntities {
  EntitySet entities;
  std::vector<std::string> warnings;
};

// JSON {"characters": [...], "objects": [...], "scenes": [...]} or the
// sectioned markdown form ("Characters:", "Key Objects:", "Scene Locations:"
// headers, each followed by "- Name: description" items). Markdown must have
// all three headers; JSON must have "characters". Throws ParseError.
ParsedEntities parse_entities_reply(const std::string& reply);

// Events with text fields only; predicates are filled in by the planner.
// Markdown items look like
//   1. (actor, action, target, result)
//      Preconditions: ...
//      Effects: ...
// A tuple with more than four fields joins fields four onwards into result.
std::vector<KeyEvent> parse_events_reply(const std::string& reply);

struct ParsedShot {
  PanelSpec spec;
  // Raw wording when the reply had no explicit lists; the planner resolves
  // entity mentions from these.
  std::string characters_text;
  std::string objects_text;
};

// JSON {"shots": [...]} or markdown "Shot N:" blocks with labelled fields.
// Every shot needs a rendering prompt. Throws ParseError.
std::vector<ParsedShot> parse_shots_reply(const std::string& reply);

// Serializers producing the fenced-JSON reply shape the parsers accept;
// parse(render(x)) == x.
std::string render_entities_reply(const EntitySet& entities);
std::string render_events_reply(const std::vector<KeyEvent>& events);
std::string render_shots_reply(const std::vector<PanelSpec>& panels);

// Human-readable lists bound to {entities} and {events} in prompts.
std::string format_entities_for_prompt(const EntitySet& entities);
std::string format_events_for_prompt(const std::vector<KeyEvent>& events);
// "(actor, action, target, result)"
std::string format_event_tuple(const KeyEvent& e);

}  // namespace logistory
