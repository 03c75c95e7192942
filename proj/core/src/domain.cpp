#include "logistory/domain.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "logistory/text.hpp"

namespace logistory {

namespace {

const std::set<std::string> kStoryFields = {"id",           "level",          "title",
                                            "source",       "story_outline",  "character_list",
                                            "causal_event_chain"};

template <typename T>
T required(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw DomainError(std::string("missing field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DomainError(std::string("field '") + key + "': " + e.what());
  }
}

std::string optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return {};
  return j.at(key).get<std::string>();
}

}  // namespace

std::string_view to_string(Level level) {
  switch (level) {
    case Level::easy: return "easy";
    case Level::medium: return "medium";
    case Level::hard: return "hard";
  }
  return "easy";
}

Level parse_level(std::string_view s) {
  const std::string n = text::normalize(s);
  if (n == "easy") return Level::easy;
  if (n == "medium") return Level::medium;
  if (n == "hard") return Level::hard;
  throw DomainError("unknown level '" + std::string(s) + "'");
}

std::vector<Violation> validate_story_record(const StoryRecord& record) {
  std::vector<Violation> out;
  if (record.id <= 0) {
    out.push_back({"id", "positive-id", "id must be a positive integer, got " + std::to_string(record.id)});
  }
  if (record.causal_event_chain.empty()) {
    out.push_back({"causal_event_chain", "non-empty-chain", "causal_event_chain must not be empty"});
  } else {
    double sum = 0.0;
    for (std::size_t i = 0; i < record.causal_event_chain.size(); ++i) {
      const auto& ev = record.causal_event_chain[i];
      const std::string where = "causal_event_chain[" + std::to_string(i) + "]";
      if (!(ev.weight > 0.0 && ev.weight <= 1.0)) {
        std::ostringstream msg;
        msg << "weight " << ev.weight << " outside (0, 1]";
        out.push_back({where + ".weight", "weight-range", msg.str()});
      }
      if (text::trim(ev.action).empty()) {
        out.push_back({where + ".action", "non-empty-action", "action is empty"});
      }
      if (text::trim(ev.result).empty()) {
        out.push_back({where + ".result", "non-empty-result", "result is empty"});
      }
      sum += ev.weight;
    }
    if (!(std::fabs(sum - 1.0) <= kWeightSumTolerance)) {
      std::ostringstream msg;
      msg.precision(12);
      msg << "weights sum to " << sum << ", |" << sum << " - 1| > " << kWeightSumTolerance;
      out.push_back({"causal_event_chain", "weight-sum", msg.str()});
    }
  }
  std::set<std::string> seen;
  for (const auto& name : record.character_list) {
    const std::string key = text::normalize(name);
    if (key.empty()) {
      out.push_back({"character_list", "non-empty-name", "character name is empty"});
    } else if (!seen.insert(key).second) {
      out.push_back({"character_list", "unique-names", "duplicate character '" + name + "'"});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::character: return "character";
    case EntityKind::object: return "object";
    case EntityKind::scene: return "scene";
  }
  return "character";
}

EntityKind parse_entity_kind(std::string_view s) {
  const std::string n = text::normalize(s);
  if (n == "character") return EntityKind::character;
  if (n == "object") return EntityKind::object;
  if (n == "scene") return EntityKind::scene;
  throw DomainError("unknown entity kind '" + std::string(s) + "'");
}

std::string canonical_name(std::string_view name) {
  std::string n = text::normalize(name);
  for (std::string_view article : {"the ", "a ", "an "}) {
    if (n.size() > article.size() && n.compare(0, article.size(), article) == 0) {
      n.erase(0, article.size());
      break;
    }
  }
  // Typographic apostrophes are common in model output ("Pig2’s house").
  std::string out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n.compare(i, 3, "\xE2\x80\x99") == 0) {
      out.push_back('\'');
      i += 2;
    } else {
      out.push_back(n[i]);
    }
  }
  return out;
}

const EntityDef* EntitySet::find(std::string_view name) const {
  const std::string key = canonical_name(name);
  for (const auto* list : {&characters, &objects, &scenes}) {
    for (const auto& e : *list) {
      if (canonical_name(e.name) == key) return &e;
    }
  }
  return nullptr;
}

const EntityDef* EntitySet::find(std::string_view name, EntityKind kind) const {
  const std::string key = canonical_name(name);
  const auto& list = kind == EntityKind::character ? characters
                     : kind == EntityKind::object  ? objects
                                                   : scenes;
  for (const auto& e : list) {
    if (canonical_name(e.name) == key) return &e;
  }
  return nullptr;
}

std::vector<const EntityDef*> EntitySet::all() const {
  std::vector<const EntityDef*> out;
  for (const auto* list : {&characters, &objects, &scenes}) {
    for (const auto& e : *list) out.push_back(&e);
  }
  return out;
}

std::vector<Violation> validate_entity_set(const EntitySet& set) {
  std::vector<Violation> out;
  auto check = [&](const std::vector<EntityDef>& list, const char* field, EntityKind kind) {
    std::set<std::string> seen;
    for (const auto& e : list) {
      const std::string key = canonical_name(e.name);
      if (key.empty()) {
        out.push_back({field, "non-empty-name", "entity name is empty"});
        continue;
      }
      if (!seen.insert(key).second) {
        out.push_back({field, "unique-names", "duplicate entity '" + e.name + "'"});
      }
      if (text::trim(e.description).empty()) {
        out.push_back({field, "non-empty-description", "entity '" + e.name + "' has no description"});
      }
      if (e.kind != kind) {
        out.push_back({field, "kind", "entity '" + e.name + "' listed under the wrong kind"});
      }
    }
  };
  check(set.characters, "characters", EntityKind::character);
  check(set.objects, "objects", EntityKind::object);
  check(set.scenes, "scenes", EntityKind::scene);
  return out;
}

// ---------------------------------------------------------------------------

std::string canonical_predicate(const StatePredicate& p) {
  std::string e = text::normalize(p.entity);
  std::string a = text::normalize(p.attribute);
  std::string v = text::normalize(p.value);
  if (e.empty() || a.empty() || v.empty()) {
    throw DomainError("state predicate has an empty field: (" + p.entity + ", " + p.attribute +
                      ", " + p.value + ")");
  }
  return e + "|" + a + "|" + v;
}

StatePredicate parse_canonical_predicate(std::string_view canonical) {
  auto parts = text::split(canonical, '|');
  if (parts.size() < 3) {
    throw DomainError("not a canonical predicate: '" + std::string(canonical) + "'");
  }
  // Values may legitimately contain '|'; only the first two separate fields.
  std::string value = parts[2];
  for (std::size_t i = 3; i < parts.size(); ++i) value += "|" + parts[i];
  StatePredicate p{parts[0], parts[1], value};
  canonical_predicate(p);
  return p;
}

bool is_note(const StatePredicate& p) {
  return text::normalize(p.entity) == kNoteEntity && text::normalize(p.attribute) == kNoteAttribute;
}

bool is_multi_valued_attribute(std::string_view attribute) {
  const std::string a = text::normalize(attribute);
  return a == kNoteAttribute || a == "has" || a == "owns";
}

// ---------------------------------------------------------------------------

std::string_view to_string(ShotType t) {
  switch (t) {
    case ShotType::wide: return "wide";
    case ShotType::medium: return "medium";
    case ShotType::close_up: return "close_up";
    case ShotType::over_shoulder: return "over_shoulder";
    case ShotType::other: return "other";
  }
  return "other";
}

std::string_view to_string(CameraAngle a) {
  switch (a) {
    case CameraAngle::eye_level: return "eye_level";
    case CameraAngle::low: return "low";
    case CameraAngle::high: return "high";
    case CameraAngle::other: return "other";
  }
  return "other";
}

namespace {

// Hyphens, underscores and spaces are interchangeable in camera vocabulary.
std::string camera_key(std::string_view s) {
  std::string n = text::normalize(s);
  for (char& c : n) {
    if (c == '-' || c == '_') c = ' ';
  }
  return n;
}

bool contains(const std::string& hay, std::string_view needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

ShotType classify_shot_type(std::string_view raw) {
  const std::string s = camera_key(raw);
  if (contains(s, "over the shoulder") || contains(s, "over shoulder") || s == "over_shoulder")
    return ShotType::over_shoulder;
  if (contains(s, "close up") || contains(s, "closeup") || s == "close") return ShotType::close_up;
  if (contains(s, "wide") || contains(s, "long shot") || contains(s, "establishing"))
    return ShotType::wide;
  if (contains(s, "medium") || contains(s, "mid shot")) return ShotType::medium;
  return ShotType::other;
}

CameraAngle classify_angle(std::string_view raw) {
  const std::string s = camera_key(raw);
  if (contains(s, "eye level") || contains(s, "eyelevel")) return CameraAngle::eye_level;
  if (contains(s, "low angle") || s == "low" || contains(s, "worm")) return CameraAngle::low;
  if (contains(s, "high angle") || s == "high" || contains(s, "bird")) return CameraAngle::high;
  return CameraAngle::other;
}

CameraSetup make_camera(std::string_view shot_text, std::string_view angle_text,
                        std::string perspective) {
  CameraSetup c;
  c.shot_type = classify_shot_type(shot_text);
  c.shot_type_text = text::trim(shot_text);
  c.angle = classify_angle(angle_text);
  c.angle_text = text::trim(angle_text);
  c.perspective = text::trim(perspective);
  return c;
}

std::string_view to_string(ImageOrigin o) {
  switch (o) {
    case ImageOrigin::generated: return "generated";
    case ImageOrigin::regenerated: return "regenerated";
    case ImageOrigin::edited: return "edited";
  }
  return "generated";
}

ImageOrigin parse_image_origin(std::string_view s) {
  if (s == "generated") return ImageOrigin::generated;
  if (s == "regenerated") return ImageOrigin::regenerated;
  if (s == "edited") return ImageOrigin::edited;
  throw DomainError("unknown image origin '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

void to_json(json& j, const AnnotatedCausalEvent& e) {
  j = json{{"action", e.action}, {"result", e.result}, {"weight", e.weight}};
}

void from_json(const json& j, AnnotatedCausalEvent& e) {
  e.action = required<std::string>(j, "action");
  e.result = required<std::string>(j, "result");
  e.weight = required<double>(j, "weight");
}

void to_json(json& j, const StoryRecord& r) {
  j = r.extra.is_object() ? r.extra : json::object();
  j["id"] = r.id;
  j["level"] = std::string(to_string(r.level));
  j["title"] = r.title;
  j["source"] = r.source;
  j["story_outline"] = r.story_outline;
  j["character_list"] = r.character_list;
  j["causal_event_chain"] = r.causal_event_chain;
}

void from_json(const json& j, StoryRecord& r) {
  if (!j.is_object()) throw DomainError("story record must be a JSON object");
  r.id = required<std::int64_t>(j, "id");
  r.level = parse_level(required<std::string>(j, "level"));
  r.title = required<std::string>(j, "title");
  r.source = required<std::string>(j, "source");
  r.story_outline = required<std::string>(j, "story_outline");
  r.character_list = required<std::vector<std::string>>(j, "character_list");
  const auto& chain = j.at("causal_event_chain");
  if (!chain.is_array()) throw DomainError("field 'causal_event_chain': expected an array");
  r.causal_event_chain.clear();
  for (std::size_t i = 0; i < chain.size(); ++i) {
    try {
      r.causal_event_chain.push_back(chain[i].get<AnnotatedCausalEvent>());
    } catch (const DomainError& e) {
      throw DomainError("causal_event_chain[" + std::to_string(i) + "]: " + e.what());
    }
  }
  r.extra = json::object();
  for (const auto& [key, value] : j.items()) {
    if (!kStoryFields.count(key)) r.extra[key] = value;
  }
}

void to_json(json& j, const Violation& v) {
  j = json{{"field", v.field}, {"rule", v.rule}, {"message", v.message}};
}

void to_json(json& j, const EntityDef& e) {
  j = json{{"name", e.name}, {"kind", std::string(to_string(e.kind))}, {"description", e.description}};
}

void from_json(const json& j, EntityDef& e) {
  e.name = text::trim(required<std::string>(j, "name"));
  e.kind = j.contains("kind") ? parse_entity_kind(j.at("kind").get<std::string>()) : EntityKind::character;
  e.description = optional_string(j, "description");
}

void to_json(json& j, const EntitySet& s) {
  j = json{{"characters", s.characters}, {"objects", s.objects}, {"scenes", s.scenes}};
}

void from_json(const json& j, EntitySet& s) {
  auto read = [&](const char* key, EntityKind kind) {
    std::vector<EntityDef> out;
    if (!j.contains(key)) return out;
    for (const auto& item : j.at(key)) {
      EntityDef e = item.get<EntityDef>();
      e.kind = kind;
      out.push_back(std::move(e));
    }
    return out;
  };
  s.characters = read("characters", EntityKind::character);
  s.objects = read("objects", EntityKind::object);
  s.scenes = read("scenes", EntityKind::scene);
}

void to_json(json& j, const StatePredicate& p) {
  j = json{{"entity", p.entity}, {"attribute", p.attribute}, {"value", p.value}};
}

void from_json(const json& j, StatePredicate& p) {
  p.entity = required<std::string>(j, "entity");
  p.attribute = required<std::string>(j, "attribute");
  p.value = required<std::string>(j, "value");
}

void to_json(json& j, const KeyEvent& e) {
  j = json{{"index", e.index},
           {"actor", e.actor},
           {"action", e.action},
           {"target", e.target},
           {"result", e.result},
           {"preconditions_text", e.preconditions_text},
           {"effects_text", e.effects_text},
           {"preconditions", e.preconditions},
           {"effects", e.effects}};
}

void from_json(const json& j, KeyEvent& e) {
  e.index = required<int>(j, "index");
  e.actor = required<std::string>(j, "actor");
  e.action = required<std::string>(j, "action");
  e.target = optional_string(j, "target");
  e.result = optional_string(j, "result");
  e.preconditions_text = optional_string(j, "preconditions_text");
  e.effects_text = optional_string(j, "effects_text");
  e.preconditions = j.value("preconditions", std::vector<StatePredicate>{});
  e.effects = j.value("effects", std::vector<StatePredicate>{});
}

void to_json(json& j, const CameraSetup& c) {
  j = json{{"shot_type", std::string(to_string(c.shot_type))},
           {"shot_type_text", c.shot_type_text},
           {"angle", std::string(to_string(c.angle))},
           {"angle_text", c.angle_text},
           {"perspective", c.perspective}};
}

void from_json(const json& j, CameraSetup& c) {
  const std::string shot = j.value("shot_type", std::string("medium"));
  const std::string angle = j.value("angle", std::string("eye_level"));
  c.shot_type_text = j.value("shot_type_text", shot);
  c.angle_text = j.value("angle_text", angle);
  c.shot_type = classify_shot_type(shot);
  if (c.shot_type == ShotType::other && shot != "other") c.shot_type = classify_shot_type(c.shot_type_text);
  c.angle = classify_angle(angle);
  if (c.angle == CameraAngle::other && angle != "other") c.angle = classify_angle(c.angle_text);
  c.perspective = j.value("perspective", std::string());
}

void to_json(json& j, const PanelSpec& p) {
  j = json{{"index", p.index},
           {"scene_description", p.scene_description},
           {"characters_present", p.characters_present},
           {"actions", p.actions},
           {"objects_present", p.objects_present},
           {"spatial_layout", p.spatial_layout},
           {"camera", p.camera},
           {"rendering_prompt", p.rendering_prompt},
           {"events", p.events}};
}

void from_json(const json& j, PanelSpec& p) {
  p.index = required<int>(j, "index");
  p.scene_description = optional_string(j, "scene_description");
  p.characters_present = j.value("characters_present", std::vector<std::string>{});
  p.actions = optional_string(j, "actions");
  p.objects_present = j.value("objects_present", std::vector<std::string>{});
  p.spatial_layout = optional_string(j, "spatial_layout");
  p.camera = j.contains("camera") ? j.at("camera").get<CameraSetup>() : CameraSetup{};
  p.rendering_prompt = required<std::string>(j, "rendering_prompt");
  p.events = j.value("events", std::vector<int>{});
}

void to_json(json& j, const PanelImage& p) {
  j = json{{"panel_index", p.panel_index},
           {"artifact_path", p.artifact_path},
           {"revision", p.revision},
           {"origin", std::string(to_string(p.origin))},
           {"media_type", p.media_type}};
}

void from_json(const json& j, PanelImage& p) {
  p.panel_index = required<int>(j, "panel_index");
  p.artifact_path = required<std::string>(j, "artifact_path");
  p.revision = required<int>(j, "revision");
  p.origin = parse_image_origin(required<std::string>(j, "origin"));
  p.media_type = optional_string(j, "media_type");
}

}  // namespace logistory
