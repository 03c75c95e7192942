#include "logistory/planner_parsers.hpp"

#include <cctype>

#include "logistory/text.hpp"

namespace logistory {

namespace {

std::string field_text(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  const json& v = j.at(key);
  if (v.is_string()) return text::trim(v.get<std::string>());
  if (v.is_array()) {
    std::vector<std::string> parts;
    for (const auto& x : v) {
      std::string s = x.is_string() ? text::trim(x.get<std::string>()) : x.dump();
      while (!s.empty() && s.back() == '.') s.pop_back();
      if (!s.empty()) parts.push_back(s);
    }
    return parts.empty() ? std::string() : text::join(parts, ". ") + ".";
  }
  return v.dump();
}

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key) || j.at(key).is_null()) return out;
  const json& v = j.at(key);
  if (v.is_string()) {
    for (auto& s : text::split(v.get<std::string>(), ',')) {
      std::string t = text::trim(s);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  }
  if (!v.is_array()) throw ParseError(std::string("\"") + key + "\" must be a list");
  for (const auto& x : v) {
    if (x.is_string()) {
      out.push_back(text::trim(x.get<std::string>()));
    } else if (x.is_object() && x.contains("name")) {
      out.push_back(text::trim(x.at("name").get<std::string>()));
    } else {
      throw ParseError(std::string("\"") + key + "\" entries must be strings");
    }
  }
  return out;
}

std::vector<EntityDef> entity_list(const json& v, EntityKind kind, const std::string& key) {
  std::vector<EntityDef> out;
  auto add = [&](std::string name, std::string desc) {
    name = text::trim(name);
    if (name.empty()) throw ParseError("\"" + key + "\" entry with an empty name");
    out.push_back({std::move(name), kind, text::trim(desc)});
  };
  if (v.is_object()) {
    for (const auto& [name, desc] : v.items()) add(name, desc.is_string() ? desc.get<std::string>() : desc.dump());
    return out;
  }
  if (!v.is_array()) throw ParseError("\"" + key + "\" must be a list");
  for (const auto& item : v) {
    if (item.is_string()) {
      add(item.get<std::string>(), "");
    } else if (item.is_object() && item.contains("name") && item.at("name").is_string()) {
      add(item.at("name").get<std::string>(), item.value("description", std::string()));
    } else {
      throw ParseError("\"" + key + "\" entries need a string \"name\"");
    }
  }
  return out;
}

// "Name: description" after markdown stripping; returns false for lines
// without a colon-separated label.
bool split_label(const std::string& line, std::string& label, std::string& rest) {
  const std::size_t colon = line.find(':');
  if (colon == std::string::npos || colon == 0) return false;
  label = text::trim(line.substr(0, colon));
  rest = text::trim(line.substr(colon + 1));
  return !label.empty();
}

enum class Section { none, characters, objects, scenes };

Section section_header(const std::string& cleaned) {
  std::string label = cleaned, rest;
  std::string after;
  if (split_label(cleaned, label, after)) {
    if (!after.empty()) return Section::none;
  }
  const std::string l = text::to_lower(label);
  if (l == "characters" || l == "character") return Section::characters;
  if (l == "key objects" || l == "objects" || l == "key object") return Section::objects;
  if (l == "scene locations" || l == "scenes" || l == "locations" || l == "scene location") return Section::scenes;
  return Section::none;
}

ParsedEntities entities_from_json(const json& doc) {
  ParsedEntities out;
  if (!doc.is_object()) throw ParseError("entity reply must be a JSON object");
  if (!doc.contains("characters")) throw ParseError("missing \"characters\"");
  out.entities.characters = entity_list(doc.at("characters"), EntityKind::character, "characters");
  if (doc.contains("objects")) {
    out.entities.objects = entity_list(doc.at("objects"), EntityKind::object, "objects");
  } else {
    out.warnings.push_back("reply has no \"objects\"; treating as empty");
  }
  if (doc.contains("scenes")) {
    out.entities.scenes = entity_list(doc.at("scenes"), EntityKind::scene, "scenes");
  } else {
    out.warnings.push_back("reply has no \"scenes\"; treating as empty");
  }
  return out;
}

ParsedEntities entities_from_markdown(const std::string& reply) {
  ParsedEntities out;
  bool seen[4] = {false, false, false, false};
  Section current = Section::none;
  for (const auto& raw : text::split_lines(reply)) {
    const std::string line = text::strip_markdown(raw);
    if (line.empty()) continue;
    const Section header = section_header(line);
    if (header != Section::none) {
      current = header;
      seen[static_cast<int>(header)] = true;
      continue;
    }
    if (current == Section::none) continue;
    std::string name, desc;
    if (!split_label(line, name, desc)) continue;
    name = text::unquote(name);
    switch (current) {
      case Section::characters: out.entities.characters.push_back({name, EntityKind::character, desc}); break;
      case Section::objects: out.entities.objects.push_back({name, EntityKind::object, desc}); break;
      case Section::scenes: out.entities.scenes.push_back({name, EntityKind::scene, desc}); break;
      case Section::none: break;
    }
  }
  std::vector<std::string> missing;
  if (!seen[1]) missing.push_back("Characters");
  if (!seen[2]) missing.push_back("Key Objects");
  if (!seen[3]) missing.push_back("Scene Locations");
  if (!missing.empty()) throw ParseError("missing section(s): " + text::join(missing, ", "));
  if (out.entities.objects.empty()) out.warnings.push_back("no key objects listed");
  if (out.entities.scenes.empty()) out.warnings.push_back("no scene locations listed");
  return out;
}

void check_entities(const ParsedEntities& p) {
  if (p.entities.characters.empty()) throw ParseError("no characters listed");
  const auto violations = validate_entity_set(p.entities);
  if (!violations.empty()) {
    std::vector<std::string> msgs;
    for (const auto& v : violations) msgs.push_back(v.message);
    throw ParseError("invalid entity set: " + text::join(msgs, "; "));
  }
}

// Splits on commas that are not inside parentheses or quotes.
std::vector<std::string> split_tuple(const std::string& inner) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  bool quoted = false;
  for (char c : inner) {
    if (c == '"') quoted = !quoted;
    if (!quoted && c == '(') ++depth;
    if (!quoted && c == ')') --depth;
    if (c == ',' && depth == 0 && !quoted) {
      out.push_back(text::trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(text::trim(cur));
  return out;
}

KeyEvent event_from_tuple(const std::string& inner, int index) {
  const auto fields = split_tuple(inner);
  if (fields.size() < 4) {
    throw ParseError("event " + std::to_string(index) + ": expected (actor, action, target, result), got " +
                     std::to_string(fields.size()) + " field(s)");
  }
  KeyEvent e;
  e.index = index;
  e.actor = text::unquote(fields[0]);
  e.action = text::unquote(fields[1]);
  e.target = text::unquote(fields[2]);
  std::vector<std::string> rest(fields.begin() + 3, fields.end());
  e.result = text::unquote(text::join(rest, ", "));
  return e;
}

std::vector<KeyEvent> events_from_json(const json& doc) {
  const json* list = nullptr;
  if (doc.is_array()) {
    list = &doc;
  } else if (doc.is_object() && doc.contains("events")) {
    list = &doc.at("events");
  }
  if (!list || !list->is_array()) throw ParseError("missing \"events\" list");
  std::vector<KeyEvent> out;
  for (const auto& item : *list) {
    KeyEvent e;
    e.index = static_cast<int>(out.size()) + 1;
    if (item.is_string()) {
      std::string s = text::trim(item.get<std::string>());
      if (s.size() >= 2 && s.front() == '(' && s.back() == ')') s = s.substr(1, s.size() - 2);
      e = event_from_tuple(s, e.index);
    } else if (item.is_object()) {
      e.actor = field_text(item, "actor");
      e.action = field_text(item, "action");
      e.target = field_text(item, "target");
      e.result = field_text(item, "result");
      e.preconditions_text = field_text(item, "preconditions");
      e.effects_text = field_text(item, "effects");
    } else {
      throw ParseError("event " + std::to_string(e.index) + " must be an object");
    }
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<KeyEvent> events_from_markdown(const std::string& reply) {
  std::vector<KeyEvent> out;
  for (const auto& raw : text::split_lines(reply)) {
    const std::string line = text::strip_markdown(raw);
    if (line.empty()) continue;
    if (line.front() == '(') {
      const std::size_t close = line.rfind(')');
      if (close == std::string::npos) {
        throw ParseError("event " + std::to_string(out.size() + 1) + ": unterminated tuple");
      }
      out.push_back(event_from_tuple(line.substr(1, close - 1), static_cast<int>(out.size()) + 1));
      continue;
    }
    std::string label, rest;
    if (out.empty() || !split_label(line, label, rest)) continue;
    const std::string l = text::to_lower(label);
    if (l == "preconditions" || l == "precondition") {
      out.back().preconditions_text = rest;
    } else if (l == "effects" || l == "effect") {
      out.back().effects_text = rest;
    }
  }
  return out;
}

std::vector<int> int_list(const json& j, const char* key) {
  std::vector<int> out;
  if (!j.contains(key) || j.at(key).is_null()) return out;
  const json& v = j.at(key);
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array()) throw ParseError(std::string("\"") + key + "\" must be a list of event numbers");
  for (const auto& x : v) {
    if (!x.is_number_integer()) throw ParseError(std::string("\"") + key + "\" must be a list of event numbers");
    out.push_back(x.get<int>());
  }
  return out;
}

std::vector<ParsedShot> shots_from_json(const json& doc) {
  const json* list = nullptr;
  if (doc.is_array()) {
    list = &doc;
  } else if (doc.is_object()) {
    for (const char* key : {"shots", "panels", "frames"}) {
      if (doc.contains(key)) {
        list = &doc.at(key);
        break;
      }
    }
  }
  if (!list || !list->is_array()) throw ParseError("missing \"shots\" list");
  std::vector<ParsedShot> out;
  for (const auto& item : *list) {
    const int index = static_cast<int>(out.size()) + 1;
    if (!item.is_object()) throw ParseError("shot " + std::to_string(index) + " must be an object");
    ParsedShot shot;
    PanelSpec& p = shot.spec;
    p.index = index;
    p.scene_description = field_text(item, "scene_description");
    p.actions = field_text(item, "actions");
    p.spatial_layout = field_text(item, "spatial_layout");
    p.rendering_prompt = text::unquote(field_text(item, "rendering_prompt"));
    p.characters_present = string_list(item, item.contains("characters") ? "characters" : "characters_present");
    p.objects_present = string_list(item, item.contains("objects") ? "objects" : "objects_present");
    p.events = int_list(item, "events");
    const json cam = item.value("camera", json::object());
    p.camera = make_camera(field_text(cam, "shot_type"), field_text(cam, "angle"), field_text(cam, "perspective"));
    if (p.rendering_prompt.empty()) throw ParseError("shot " + std::to_string(index) + ": missing rendering_prompt");
    out.push_back(std::move(shot));
  }
  return out;
}

bool shot_header(const std::string& line) {
  const std::string l = text::to_lower(line);
  for (std::string_view word : {"shot", "frame", "panel"}) {
    if (l.rfind(word, 0) != 0) continue;
    std::size_t i = word.size();
    while (i < l.size() && l[i] == ' ') ++i;
    const std::size_t digits = i;
    while (i < l.size() && std::isdigit(static_cast<unsigned char>(l[i]))) ++i;
    if (i == digits) continue;
    while (i < l.size() && (l[i] == ':' || l[i] == ' ')) ++i;
    if (i == l.size()) return true;
  }
  return false;
}

std::vector<int> event_numbers(const std::string& s) {
  std::vector<int> out;
  int cur = -1;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      cur = (cur < 0 ? 0 : cur * 10) + (c - '0');
    } else if (cur >= 0) {
      out.push_back(cur);
      cur = -1;
    }
  }
  if (cur >= 0) out.push_back(cur);
  return out;
}

std::vector<ParsedShot> shots_from_markdown(const std::string& reply) {
  std::vector<ParsedShot> out;
  struct Pending {
    std::string shot_type, angle, perspective;
  };
  std::vector<Pending> cams;
  for (const auto& raw : text::split_lines(reply)) {
    const std::string line = text::strip_markdown(raw);
    if (line.empty()) continue;
    if (shot_header(line)) {
      ParsedShot s;
      s.spec.index = static_cast<int>(out.size()) + 1;
      out.push_back(std::move(s));
      cams.emplace_back();
      continue;
    }
    if (out.empty()) continue;
    std::string label, rest;
    if (!split_label(line, label, rest)) continue;
    std::string l = text::to_lower(label);
    if (const auto paren = l.find('('); paren != std::string::npos) l = text::trim(l.substr(0, paren));
    PanelSpec& p = out.back().spec;
    if (l == "scene description") {
      p.scene_description = rest;
    } else if (l == "characters and actions" || l == "characters" || l == "actions") {
      p.actions = rest;
      out.back().characters_text = rest;
    } else if (l == "objects and scene elements" || l == "objects") {
      out.back().objects_text = rest;
    } else if (l == "spatial layout") {
      p.spatial_layout = rest;
    } else if (l == "shot type") {
      cams.back().shot_type = rest;
    } else if (l == "camera angle" || l == "angle") {
      cams.back().angle = rest;
    } else if (l == "perspective") {
      cams.back().perspective = rest;
    } else if (l == "rendering prompt") {
      p.rendering_prompt = text::unquote(rest);
    } else if (l == "events" || l == "event") {
      p.events = event_numbers(rest);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    PanelSpec& p = out[i].spec;
    p.camera = make_camera(cams[i].shot_type, cams[i].angle, cams[i].perspective);
    if (p.rendering_prompt.empty()) throw ParseError("shot " + std::to_string(p.index) + ": missing rendering prompt");
  }
  return out;
}

std::string fenced(const json& doc) { return "```json\n" + doc.dump(2) + "\n```"; }

}  // namespace

std::optional<json> extract_json_block(const std::string& reply) {
  std::size_t pos = 0;
  while ((pos = reply.find("```", pos)) != std::string::npos) {
    std::size_t body = reply.find('\n', pos);
    if (body == std::string::npos) break;
    const std::string lang = text::to_lower(text::trim(reply.substr(pos + 3, body - pos - 3)));
    const std::size_t end = reply.find("```", body + 1);
    if (end == std::string::npos) break;
    if (lang.empty() || lang == "json") {
      try {
        return json::parse(reply.substr(body + 1, end - body - 1));
      } catch (const json::parse_error&) {
        if (lang == "json") throw ParseError("fenced JSON block does not parse");
      }
    }
    pos = end + 3;
  }
  const std::size_t open = reply.find('{');
  const std::size_t close = reply.rfind('}');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    try {
      return json::parse(reply.substr(open, close - open + 1));
    } catch (const json::parse_error&) {
    }
  }
  return std::nullopt;
}

ParsedEntities parse_entities_reply(const std::string& reply) {
  if (text::trim(reply).empty()) throw ParseError("empty reply");
  ParsedEntities out;
  try {
    if (auto doc = extract_json_block(reply)) {
      out = entities_from_json(*doc);
    } else {
      out = entities_from_markdown(reply);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed entity JSON: ") + e.what());
  }
  check_entities(out);
  return out;
}

std::vector<KeyEvent> parse_events_reply(const std::string& reply) {
  if (text::trim(reply).empty()) throw ParseError("empty reply");
  std::vector<KeyEvent> out;
  try {
    if (auto doc = extract_json_block(reply)) {
      out = events_from_json(*doc);
    } else {
      out = events_from_markdown(reply);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed event JSON: ") + e.what());
  }
  if (out.empty()) throw ParseError("empty event list");
  for (const auto& e : out) {
    const std::string where = "event " + std::to_string(e.index) + ": ";
    if (e.actor.empty()) throw ParseError(where + "empty actor");
    if (e.action.empty()) throw ParseError(where + "empty action");
    if (e.result.empty() && e.effects_text.empty()) throw ParseError(where + "no result or effects");
  }
  return out;
}

std::vector<ParsedShot> parse_shots_reply(const std::string& reply) {
  if (text::trim(reply).empty()) throw ParseError("empty reply");
  std::vector<ParsedShot> out;
  try {
    if (auto doc = extract_json_block(reply)) {
      out = shots_from_json(*doc);
    } else {
      out = shots_from_markdown(reply);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed shot JSON: ") + e.what());
  }
  if (out.empty()) throw ParseError("no shots found");
  return out;
}

// ---------------------------------------------------------------------------

std::string render_entities_reply(const EntitySet& entities) {
  auto list = [](const std::vector<EntityDef>& defs) {
    json a = json::array();
    for (const auto& d : defs) a.push_back({{"name", d.name}, {"description", d.description}});
    return a;
  };
  return fenced({{"characters", list(entities.characters)},
                 {"objects", list(entities.objects)},
                 {"scenes", list(entities.scenes)}});
}

std::string render_events_reply(const std::vector<KeyEvent>& events) {
  json a = json::array();
  for (const auto& e : events) {
    a.push_back({{"actor", e.actor},
                 {"action", e.action},
                 {"target", e.target},
                 {"result", e.result},
                 {"preconditions", e.preconditions_text},
                 {"effects", e.effects_text}});
  }
  return fenced({{"events", a}});
}

std::string render_shots_reply(const std::vector<PanelSpec>& panels) {
  json a = json::array();
  for (const auto& p : panels) {
    a.push_back({{"events", p.events},
                 {"scene_description", p.scene_description},
                 {"characters", p.characters_present},
                 {"actions", p.actions},
                 {"objects", p.objects_present},
                 {"spatial_layout", p.spatial_layout},
                 {"camera",
                  {{"shot_type", p.camera.shot_type_text},
                   {"angle", p.camera.angle_text},
                   {"perspective", p.camera.perspective}}},
                 {"rendering_prompt", p.rendering_prompt}});
  }
  return fenced({{"shots", a}});
}

std::string format_entities_for_prompt(const EntitySet& entities) {
  std::string out;
  auto section = [&](const char* title, const std::vector<EntityDef>& defs) {
    out += std::string(title) + ":\n";
    if (defs.empty()) out += "- (none)\n";
    for (const auto& d : defs) {
      out += "- " + d.name;
      if (!d.description.empty()) out += ": " + d.description;
      out += "\n";
    }
  };
  section("Characters", entities.characters);
  section("Key Objects", entities.objects);
  section("Scene Locations", entities.scenes);
  return text::trim(out);
}

std::string format_event_tuple(const KeyEvent& e) {
  return "(" + e.actor + ", " + e.action + ", " + e.target + ", " + e.result + ")";
}

std::string format_events_for_prompt(const std::vector<KeyEvent>& events) {
  std::string out;
  for (const auto& e : events) {
    out += std::to_string(e.index) + ". " + format_event_tuple(e) + "\n";
    if (!e.preconditions_text.empty()) out += "   Preconditions: " + e.preconditions_text + "\n";
    if (!e.effects_text.empty()) out += "   Effects: " + e.effects_text + "\n";
  }
  return text::trim(out);
}

}  // namespace logistory
