#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logistory/planner.hpp"
#include "test_support.hpp"

using namespace logistory;
using namespace logistory::testing;

namespace {

struct Scripted {
  std::map<std::string, std::vector<std::string>> replies;  // template -> replies in order
  std::map<std::string, std::size_t> used;
};

std::shared_ptr<ScriptedBackend> planner_backend(std::shared_ptr<Scripted> s) {
  return std::make_shared<ScriptedBackend>([s](const BackendRequest& r) {
    const std::string t = r.payload.value("template", std::string());
    auto& list = s->replies[t];
    const std::size_t i = std::min(s->used[t]++, list.size() - 1);
    return text_response(list.at(i));
  });
}

EntitySet pig_entities() {
  return parse_entities_reply(read_text(fixture("transcripts/pigs_entities.md"))).entities;
}

}  // namespace

TEST_CASE("entity phrases resolve to names") {
  const EntitySet e = pig_entities();
  CHECK(resolve_entity_phrase("Wolf ", e) == std::vector<std::string>{"Wolf"});
  CHECK(resolve_entity_phrase("Pig1 and Pig2", e) == std::vector<std::string>{"Pig1", "Pig2"});
  CHECK(resolve_entity_phrase("the pigs", e) == std::vector<std::string>{"Pig1", "Pig2", "Pig3"});
  CHECK(resolve_entity_phrase("Dragon", e).empty());
  CHECK(mentioned_entities("The Wolf chases Pig2.", e, EntityKind::character) ==
        std::vector<std::string>{"Pig2", "Wolf"});
}

TEST_CASE("event predicates are derived from text") {
  const EntitySet e = pig_entities();
  auto events = parse_events_reply(read_text(fixture("transcripts/pigs_events.md")));
  for (auto& ev : events) derive_event_predicates(ev, e);
  CHECK_FALSE(events[0].effects.empty());
  CHECK(events[0].effects[0].entity == "Pig1");
  CHECK(events[0].effects[0].attribute == "has");
  CHECK(events[8].preconditions.size() == 2);
}

TEST_CASE("coverage assignment") {
  std::vector<std::string> warnings;
  std::vector<PanelSpec> three(3);
  for (int i = 0; i < 3; ++i) three[static_cast<std::size_t>(i)].index = i + 1;
  auto cov = assign_event_coverage(three, 3, warnings);
  CHECK(cov.at(2) == std::vector<int>{2});
  std::vector<PanelSpec> two(2);
  two[0].index = 1;
  two[1].index = 2;
  cov = assign_event_coverage(two, 4, warnings);
  CHECK(cov.at(1) == std::vector<int>{1});
  CHECK(cov.at(2) == std::vector<int>{1});
  CHECK(cov.at(3) == std::vector<int>{2});
  CHECK(two[0].events == std::vector<int>{1, 2});
  std::vector<PanelSpec> explicit_refs(2);
  explicit_refs[0].index = 1;
  explicit_refs[0].events = {1};
  explicit_refs[1].index = 2;
  explicit_refs[1].events = {1};
  warnings.clear();
  assign_event_coverage(explicit_refs, 2, warnings);
  CHECK(warnings.size() == 1);
}

TEST_CASE("planning from the markdown transcripts") {
  auto s = std::make_shared<Scripted>();
  s->replies["scenecrafter"] = {read_text(fixture("transcripts/pigs_entities.md"))};
  s->replies["logicminer"] = {read_text(fixture("transcripts/pigs_events.md"))};
  s->replies["shotplanner"] = {read_text(fixture("transcripts/pigs_shots.md"))};
  auto backend = planner_backend(s);
  const BackendRegistry reg = registry_with(backend);
  const TemplateLibrary templates;
  StoryPlanner planner(reg, templates);
  StoryRecord story = crow_story();
  const PlanBundle plan = planner.plan(story);
  CHECK(plan.entities.characters.size() == 5);
  CHECK(plan.events.size() == 9);
  REQUIRE(plan.panels.size() == 2);
  CHECK(plan.panels[1].characters_present == std::vector<std::string>{"Pig1", "Wolf"});
  CHECK(plan.coverage.size() == 9);
  CHECK(plan.transcripts.size() == 3);
  const PlanBundle back = json(plan).get<PlanBundle>();
  CHECK(back.panels == plan.panels);
  CHECK(back.events == plan.events);
  // Prompts carry the story and the earlier stages' output.
  const auto reqs = backend->requests();
  CHECK(reqs[0].payload.at("prompt").get<std::string>().find(story.story_outline) != std::string::npos);
  CHECK(reqs[2].payload.at("prompt").get<std::string>().find("(Pig1, trades for, straw") != std::string::npos);
}

TEST_CASE("parse failures are fed back, then planning fails") {
  auto s = std::make_shared<Scripted>();
  s->replies["scenecrafter"] = {"I cannot help with that.", read_text(fixture("transcripts/pigs_entities.md"))};
  auto backend = planner_backend(s);
  const BackendRegistry reg = registry_with(backend);
  const TemplateLibrary templates;
  StoryPlanner planner(reg, templates);
  const EntitySet e = planner.craft_entities(crow_story());
  CHECK(e.characters.size() == 5);
  REQUIRE(planner.transcripts().size() == 2);
  CHECK_FALSE(planner.transcripts()[0].error.empty());
  CHECK(backend->requests()[1].payload.contains("reprompt"));

  auto bad = std::make_shared<Scripted>();
  bad->replies["scenecrafter"] = {"still nothing"};
  auto bad_backend = planner_backend(bad);
  const BackendRegistry bad_reg = registry_with(bad_backend);
  StoryPlanner failing(bad_reg, templates, PlannerOptions{1});
  try {
    failing.craft_entities(crow_story());
    FAIL("expected PlanningError");
  } catch (const PlanningError& err) {
    CHECK(err.stage() == "craft");
  }
  CHECK(bad_backend->requests().size() == 2);
}

TEST_CASE("unknown actors trigger a re-prompt") {
  auto s = std::make_shared<Scripted>();
  s->replies["logicminer"] = {"1. (Dragon, burns, house, House gone)\n   Preconditions: House exists.\n   Effects: House is ash.\n",
                              read_text(fixture("transcripts/pigs_events.md"))};
  auto backend = planner_backend(s);
  const BackendRegistry reg = registry_with(backend);
  const TemplateLibrary templates;
  StoryPlanner planner(reg, templates);
  const auto events = planner.mine_events(crow_story(), pig_entities());
  CHECK(events.size() == 9);
  CHECK(planner.transcripts().at(0).error.find("Dragon") != std::string::npos);
}
