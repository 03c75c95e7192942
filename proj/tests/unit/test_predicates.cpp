#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "logistory/predicates.hpp"

using namespace logistory;

namespace {

EntitySet pigs() {
  EntitySet s;
  for (const char* n : {"Pig1", "Pig2", "Pig3", "Wolf"}) s.characters.push_back({n, EntityKind::character, "d"});
  s.objects.push_back({"Pot", EntityKind::object, "d"});
  return s;
}

bool has(const std::vector<StatePredicate>& ps, const StatePredicate& p) {
  for (const auto& q : ps) {
    if (canonical_predicate(q) == canonical_predicate(p)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("recognized clause shapes") {
  const EntitySet e = pigs();
  CHECK(has(extract_predicates("Pig1 is inside Pig2's house.", &e), {"Pig1", "location", "Pig2's house"}));
  CHECK(has(extract_predicates("The pot is under the chimney.", &e), {"Pot", "location", "under chimney"}));
  CHECK(has(extract_predicates("Wolf is defeated.", &e), {"Wolf", "status", "defeated"}));
  CHECK(has(extract_predicates("Pig1 has straw.", &e), {"Pig1", "has", "straw"}));
  CHECK(has(extract_predicates("Pig1 owns straw.", &e), {"Pig1", "owns", "straw"}));
  CHECK(has(extract_predicates("Straw house appears in the scene.", &e), {"Straw house", "exists", "yes"}));
}

TEST_CASE("conjunct and plural subjects expand") {
  const EntitySet e = pigs();
  const auto both = extract_predicates("Pig1 and Pig2 are together in the brick house.", &e);
  CHECK(has(both, {"Pig1", "location", "brick house"}));
  CHECK(has(both, {"Pig2", "location", "brick house"}));
  const auto all = extract_predicates("All three pigs are safe.", &e);
  CHECK(has(all, {"Pig1", "status", "safe"}));
  CHECK(has(all, {"Pig2", "status", "safe"}));
  CHECK(has(all, {"Pig3", "status", "safe"}));
  CHECK(resolve_subjects("the pigs", &e) == std::vector<std::string>{"Pig1", "Pig2", "Pig3"});
}

TEST_CASE("unmatched clauses are kept as notes") {
  const auto ps = extract_predicates("A breeze rattles the shutters.");
  REQUIRE(ps.size() == 1);
  CHECK(is_note(ps[0]));
  CHECK(extract_predicates("").empty());
}

TEST_CASE("several sentences yield several predicates") {
  const EntitySet e = pigs();
  const auto ps = extract_predicates("Straw house is destroyed. Pig1 must flee.", &e);
  CHECK(ps.size() == 2);
  CHECK(has(ps, {"Straw house", "status", "destroyed"}));
}

TEST_CASE("state set overwrites single-valued attributes") {
  StateSet s;
  s.apply({"Wolf", "location", "forest"});
  s.apply({"Wolf", "location", "chimney"});
  CHECK(s.size() == 1);
  CHECK(s.contains({"wolf", "location", "chimney"}));
  CHECK_FALSE(s.contains({"wolf", "location", "forest"}));
  s.apply({"Pig1", "has", "straw"});
  s.apply({"Pig1", "has", "wood"});
  s.apply({"story", "note", "a"});
  s.apply({"story", "note", "b"});
  CHECK(s.size() == 5);
}

TEST_CASE("state set canonical form is order independent") {
  const std::vector<StatePredicate> a = {{"Wolf", "status", "hungry"}, {"Pot", "location", "fire"}};
  const std::vector<StatePredicate> b = {a[1], a[0]};
  CHECK(StateSet(a) == StateSet(b));
  CHECK(StateSet(a).canonical() == StateSet(b).canonical());
  const auto canon = StateSet(a).canonical();
  CHECK(std::is_sorted(canon.begin(), canon.end()));
}

TEST_CASE("describe_predicate") {
  CHECK(describe_predicate({"wolf", "status", "defeated"}) == "wolf is defeated");
  CHECK_FALSE(describe_predicate({"pot", "location", "under chimney"}).empty());
}
