#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "logistory/error.hpp"

namespace logistory {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Dataset records
// ---------------------------------------------------------------------------

enum class Level { easy, medium, hard };

std::string_view to_string(Level level);
Level parse_level(std::string_view s);  // throws DomainError

struct AnnotatedCausalEvent {
  std::string action;
  std::string result;
  double weight = 0.0;

  bool operator==(const AnnotatedCausalEvent&) const = default;
};

// One benchmark story. Fields not known to this version of the schema are
// kept in `extra` and written back unchanged.
struct StoryRecord {
  std::int64_t id = 0;
  Level level = Level::easy;
  std::string title;
  std::string source;
  std::string story_outline;
  std::vector<std::string> character_list;
  std::vector<AnnotatedCausalEvent> causal_event_chain;
  json extra = json::object();

  bool operator==(const StoryRecord&) const = default;
};

inline constexpr double kWeightSumTolerance = 1e-6;

struct Violation {
  std::string field;
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
};

// Structural checks only. An empty result means the record is valid.
std::vector<Violation> validate_story_record(const StoryRecord& record);

// ---------------------------------------------------------------------------
// Planner vocabulary
// ---------------------------------------------------------------------------

enum class EntityKind { character, object, scene };

std::string_view to_string(EntityKind kind);
EntityKind parse_entity_kind(std::string_view s);

struct EntityDef {
  std::string name;  // trimmed, case preserved
  EntityKind kind = EntityKind::character;
  std::string description;

  bool operator==(const EntityDef&) const = default;
};

struct EntitySet {
  std::vector<EntityDef> characters;
  std::vector<EntityDef> objects;
  std::vector<EntityDef> scenes;

  bool operator==(const EntitySet&) const = default;

  // Case- and whitespace-insensitive lookup across all three lists.
  const EntityDef* find(std::string_view name) const;
  const EntityDef* find(std::string_view name, EntityKind kind) const;
  std::vector<const EntityDef*> all() const;
};

std::vector<Violation> validate_entity_set(const EntitySet& set);

// Canonical key used for entity-name matching: lowercase, trimmed,
// whitespace collapsed, leading article ("the", "a", "an") removed.
std::string canonical_name(std::string_view name);

struct StatePredicate {
  std::string entity;
  std::string attribute;
  std::string value;

  bool operator==(const StatePredicate&) const = default;
};

// "entity|attribute|value" over normalized fields. Throws DomainError if any
// field is empty after trimming.
std::string canonical_predicate(const StatePredicate& p);
StatePredicate parse_canonical_predicate(std::string_view canonical);

// Predicates produced by the free-text fallback rule. They accumulate rather
// than overwrite and never count as contradictions.
inline constexpr std::string_view kNoteEntity = "story";
inline constexpr std::string_view kNoteAttribute = "note";
bool is_note(const StatePredicate& p);

// Attributes that may hold several values at once for one entity.
bool is_multi_valued_attribute(std::string_view attribute);

struct KeyEvent {
  int index = 0;  // 1-based
  std::string actor;
  std::string action;
  std::string target;
  std::string result;
  std::string preconditions_text;
  std::string effects_text;
  std::vector<StatePredicate> preconditions;
  std::vector<StatePredicate> effects;

  bool operator==(const KeyEvent&) const = default;
};

enum class ShotType { wide, medium, close_up, over_shoulder, other };
enum class CameraAngle { eye_level, low, high, other };

struct CameraSetup {
  ShotType shot_type = ShotType::medium;
  std::string shot_type_text;  // original wording; required for `other`
  CameraAngle angle = CameraAngle::eye_level;
  std::string angle_text;
  std::string perspective;

  bool operator==(const CameraSetup&) const = default;
};

std::string_view to_string(ShotType t);
std::string_view to_string(CameraAngle a);
// Free-text classifiers ("Medium shot" -> medium, "Slight low-angle" -> low).
ShotType classify_shot_type(std::string_view text);
CameraAngle classify_angle(std::string_view text);
CameraSetup make_camera(std::string_view shot_text, std::string_view angle_text,
                        std::string perspective);

struct PanelSpec {
  int index = 0;  // 1-based
  std::string scene_description;
  std::vector<std::string> characters_present;
  std::string actions;
  std::vector<std::string> objects_present;
  std::string spatial_layout;
  CameraSetup camera;
  std::string rendering_prompt;
  std::vector<int> events;  // KeyEvent indices depicted by this panel

  bool operator==(const PanelSpec&) const = default;
};

enum class ImageOrigin { generated, regenerated, edited };

std::string_view to_string(ImageOrigin o);
ImageOrigin parse_image_origin(std::string_view s);

struct PanelImage {
  int panel_index = 0;
  std::string artifact_path;  // relative to the run directory
  int revision = 0;
  ImageOrigin origin = ImageOrigin::generated;
  std::string media_type;

  bool operator==(const PanelImage&) const = default;
};

// ---------------------------------------------------------------------------
// JSON encodings
// ---------------------------------------------------------------------------

void to_json(json& j, const AnnotatedCausalEvent& e);
void from_json(const json& j, AnnotatedCausalEvent& e);
void to_json(json& j, const StoryRecord& r);
void from_json(const json& j, StoryRecord& r);
void to_json(json& j, const Violation& v);
void to_json(json& j, const EntityDef& e);
void from_json(const json& j, EntityDef& e);
void to_json(json& j, const EntitySet& s);
void from_json(const json& j, EntitySet& s);
void to_json(json& j, const StatePredicate& p);
void from_json(const json& j, StatePredicate& p);
void to_json(json& j, const KeyEvent& e);
void from_json(const json& j, KeyEvent& e);
void to_json(json& j, const CameraSetup& c);
void from_json(const json& j, CameraSetup& c);
void to_json(json& j, const PanelSpec& p);
void from_json(const json& j, PanelSpec& p);
void to_json(json& j, const PanelImage& p);
void from_json(const json& j, PanelImage& p);

}  // namespace logistory
