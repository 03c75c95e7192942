#pragma once

#include <map>
#include <string>
#include <vector>

#include "logistory/domain.hpp"

namespace logistory {

struct GraphEdge {
  int from = 0;
  int to = 0;
  int event = 0;  // KeyEvent index causing the transition

  bool operator==(const GraphEdge&) const = default;
};

class GraphError : public Error {
 public:
  GraphError(const std::string& message, std::vector<GraphEdge> offending = {})
      : Error(message), offending_(std::move(offending)) {}
  const std::vector<GraphEdge>& offending_edges() const { return offending_; }

 private:
  std::vector<GraphEdge> offending_;
};

struct GraphNode {
  int id = 0;
  std::vector<std::string> predicates;  // canonical, sorted, unique
  std::string label;
  int event = 0;  // first event whose post-state this is; 0 for the initial state

  bool operator==(const GraphNode&) const = default;
};

// Immutable DAG over story states.
class CausalGraph {
 public:
  CausalGraph() = default;

  // Checks unique ids, edge endpoints and acyclicity. Throws GraphError; a
  // cycle error lists the edges left over by Kahn's algorithm.
  static CausalGraph from_parts(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges);

  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const GraphNode& node(int id) const;
  const std::vector<int>& topological_order() const { return topo_; }

  // True when `to` can be reached from `from` over at least one edge.
  bool reachable(int from, int to) const;

  // Node holding the post-state of event k (1-based), or -1.
  int node_after_event(int k) const;

  json to_json() const;
  std::string to_dot() const;

 private:
  std::size_t position(int id) const;

  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<std::size_t>> out_;  // by node position
  std::vector<int> topo_;
  std::map<int, int> after_event_;  // event index -> node id
};

// Node 0 is the first event's preconditions. Each event's effects form a
// post-state node; identical post-states share a node. Edges: a temporal edge
// from the previous event's node to event k's node, plus a causal edge from
// event j's node to event k's node (j < k) when j's effects meet k's
// preconditions. Throws GraphError on empty input, an event without effects,
// or a cycle.
CausalGraph build_graph(const std::vector<KeyEvent>& events);

CausalGraph graph_from_json(const json& j);

struct StateTransition {
  std::vector<StatePredicate> pre;
  std::string action;
  std::vector<StatePredicate> post;
};

enum class TransitionVerdict { valid, unmatched_state, no_path };

std::string_view to_string(TransitionVerdict v);

struct TransitionResult {
  TransitionVerdict verdict = TransitionVerdict::unmatched_state;
  int pre_node = -1;
  int post_node = -1;
  std::string reason;

  bool valid() const { return verdict == TransitionVerdict::valid; }
};

// Binds pre and post to the node with maximal Jaccard overlap (ties: earliest
// event), then requires a directed path of at least one edge.
TransitionResult validate_transition(const CausalGraph& g, const StateTransition& tr);

// Best-matching node for a predicate set, or -1 when nothing overlaps.
int match_state(const CausalGraph& g, const std::vector<std::string>& canonical_predicates);

double jaccard(const std::vector<std::string>& sorted_a, const std::vector<std::string>& sorted_b);

}  // namespace logistory
