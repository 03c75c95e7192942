#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logistory/causal_graph.hpp"
#include "logistory/planner.hpp"
#include "logistory/planner_parsers.hpp"
#include "test_support.hpp"

using namespace logistory;

namespace {

GraphNode node(int id, const std::string& value) {
  GraphNode n;
  n.id = id;
  n.predicates = {canonical_predicate({"x", "status", value})};
  n.label = value;
  return n;
}

std::vector<KeyEvent> pig_events() {
  const auto entities = parse_entities_reply(testing::read_text(testing::fixture("transcripts/pigs_entities.md"))).entities;
  auto events = parse_events_reply(testing::read_text(testing::fixture("transcripts/pigs_events.md")));
  for (auto& e : events) derive_event_predicates(e, entities);
  return events;
}

}  // namespace

TEST_CASE("from_parts validates structure") {
  CHECK_NOTHROW(CausalGraph::from_parts({node(0, "a"), node(1, "b")}, {{0, 1, 1}}));
  CHECK_THROWS_AS(CausalGraph::from_parts({node(0, "a"), node(0, "b")}, {}), GraphError);
  CHECK_THROWS_AS(CausalGraph::from_parts({node(0, "a")}, {{0, 5, 1}}), GraphError);
  try {
    CausalGraph::from_parts({node(0, "a"), node(1, "b"), node(2, "c")}, {{0, 1, 1}, {1, 2, 2}, {2, 1, 3}});
    FAIL("cycle accepted");
  } catch (const GraphError& e) {
    CHECK(e.offending_edges().size() >= 2);
  }
}

TEST_CASE("reachability needs at least one edge") {
  const auto g = CausalGraph::from_parts({node(0, "a"), node(1, "b"), node(2, "c")}, {{0, 1, 1}, {1, 2, 2}});
  CHECK(g.reachable(0, 2));
  CHECK_FALSE(g.reachable(2, 0));
  CHECK_FALSE(g.reachable(1, 1));
  CHECK(g.topological_order() == std::vector<int>{0, 1, 2});
}

TEST_CASE("graph from the pig events") {
  const auto events = pig_events();
  REQUIRE(events.size() == 9);
  const CausalGraph g = build_graph(events);
  CHECK(g.nodes().front().id == 0);
  for (int k = 1; k <= 9; ++k) {
    const int n = g.node_after_event(k);
    REQUIRE(n >= 0);
    CHECK(g.reachable(0, n));
  }
  // Temporal edges chain the events in story order.
  for (int k = 2; k <= 9; ++k) {
    const int a = g.node_after_event(k - 1), b = g.node_after_event(k);
    if (a != b) CHECK(g.reachable(a, b));
  }
  CHECK(g.to_dot().find("digraph") != std::string::npos);
  const CausalGraph back = graph_from_json(g.to_json());
  CHECK(back.nodes() == g.nodes());
  CHECK(back.edges() == g.edges());
}

TEST_CASE("build_graph rejects empty input and effect-less events") {
  CHECK_THROWS_AS(build_graph({}), GraphError);
  KeyEvent e;
  e.index = 1;
  e.actor = "Wolf";
  e.action = "waits";
  CHECK_THROWS_AS(build_graph({e}), GraphError);
}

TEST_CASE("causal edges follow effects into preconditions") {
  KeyEvent a, b, c;
  a.index = 1;
  a.preconditions = {{"pot", "status", "cold"}};
  a.effects = {{"pot", "status", "boiling"}};
  b.index = 2;
  b.preconditions = {{"wolf", "location", "roof"}};
  b.effects = {{"wolf", "location", "chimney"}};
  c.index = 3;
  c.preconditions = {{"pot", "status", "boiling"}};
  c.effects = {{"wolf", "status", "defeated"}};
  const CausalGraph g = build_graph({a, b, c});
  const int na = g.node_after_event(1), nc = g.node_after_event(3);
  bool direct = false;
  for (const auto& e : g.edges()) direct = direct || (e.from == na && e.to == nc);
  CHECK(direct);
}

TEST_CASE("jaccard and state matching") {
  CHECK(jaccard({}, {}) == 0.0);
  CHECK(jaccard({"a", "b"}, {"b", "c"}) == doctest::Approx(1.0 / 3.0));
  CHECK(jaccard({"a"}, {"a"}) == 1.0);
  const auto g = CausalGraph::from_parts({node(0, "a"), node(1, "b")}, {{0, 1, 1}});
  CHECK(match_state(g, {canonical_predicate({"x", "status", "b"})}) == 1);
  CHECK(match_state(g, {canonical_predicate({"y", "status", "z"})}) == -1);
}

TEST_CASE("transition verdicts") {
  const auto g = CausalGraph::from_parts({node(0, "a"), node(1, "b")}, {{0, 1, 1}});
  StateTransition forward{{{"x", "status", "a"}}, "go", {{"x", "status", "b"}}};
  CHECK(validate_transition(g, forward).verdict == TransitionVerdict::valid);
  StateTransition backward{{{"x", "status", "b"}}, "go", {{"x", "status", "a"}}};
  CHECK(validate_transition(g, backward).verdict == TransitionVerdict::no_path);
  StateTransition unknown{{{"q", "status", "r"}}, "go", {{"x", "status", "b"}}};
  CHECK(validate_transition(g, unknown).verdict == TransitionVerdict::unmatched_state);
}
