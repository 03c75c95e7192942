#include "logistory/causal_graph.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "logistory/predicates.hpp"

namespace logistory {

namespace {

std::vector<std::string> canonical_set(const std::vector<StatePredicate>& preds) {
  std::set<std::string> s;
  for (const auto& p : preds) s.insert(canonical_predicate(p));
  return {s.begin(), s.end()};
}

bool intersects(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return false;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++common;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

CausalGraph CausalGraph::from_parts(std::vector<GraphNode> nodes, std::vector<GraphEdge> edges) {
  CausalGraph g;
  std::map<int, std::size_t> pos;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!pos.emplace(nodes[i].id, i).second) throw GraphError("duplicate node id " + std::to_string(nodes[i].id));
    std::sort(nodes[i].predicates.begin(), nodes[i].predicates.end());
    nodes[i].predicates.erase(std::unique(nodes[i].predicates.begin(), nodes[i].predicates.end()),
                              nodes[i].predicates.end());
  }
  g.out_.assign(nodes.size(), {});
  std::vector<int> indegree(nodes.size(), 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto f = pos.find(edges[e].from);
    auto t = pos.find(edges[e].to);
    if (f == pos.end() || t == pos.end()) {
      throw GraphError("edge " + std::to_string(edges[e].from) + "->" + std::to_string(edges[e].to) +
                           " refers to a missing node",
                       {edges[e]});
    }
    g.out_[f->second].push_back(e);
    ++indegree[t->second];
  }

  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::vector<bool> done(nodes.size(), false);
  while (!ready.empty()) {
    const std::size_t n = ready.front();
    ready.pop_front();
    done[n] = true;
    g.topo_.push_back(nodes[n].id);
    for (std::size_t e : g.out_[n]) {
      const std::size_t t = pos.at(edges[e].to);
      if (--indegree[t] == 0) ready.push_back(t);
    }
  }
  if (g.topo_.size() != nodes.size()) {
    std::vector<GraphEdge> offending;
    for (const auto& e : edges) {
      if (!done[pos.at(e.from)] && !done[pos.at(e.to)]) offending.push_back(e);
    }
    std::string msg = "causal graph has a cycle; offending edges:";
    for (const auto& e : offending) {
      msg += " " + std::to_string(e.from) + "->" + std::to_string(e.to) + " (event " + std::to_string(e.event) + ")";
    }
    throw GraphError(msg, std::move(offending));
  }

  for (const auto& n : nodes) {
    if (n.event >= 1) g.after_event_.emplace(n.event, n.id);
  }
  // Deduplicated post-states keep the first event's id; later events sharing
  // the node are found through the edges labelled with them.
  for (const auto& e : edges) {
    if (e.event >= 1) g.after_event_.emplace(e.event, e.to);
  }
  g.nodes_ = std::move(nodes);
  g.edges_ = std::move(edges);
  return g;
}

std::size_t CausalGraph::position(int id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  throw GraphError("no node with id " + std::to_string(id));
}

const GraphNode& CausalGraph::node(int id) const { return nodes_[position(id)]; }

bool CausalGraph::reachable(int from, int to) const {
  std::vector<bool> seen(nodes_.size(), false);
  std::deque<std::size_t> queue{position(from)};
  const std::size_t target = position(to);
  while (!queue.empty()) {
    const std::size_t n = queue.front();
    queue.pop_front();
    for (std::size_t e : out_[n]) {
      const std::size_t t = position(edges_[e].to);
      if (t == target) return true;
      if (!seen[t]) {
        seen[t] = true;
        queue.push_back(t);
      }
    }
  }
  return false;
}

int CausalGraph::node_after_event(int k) const {
  auto it = after_event_.find(k);
  return it == after_event_.end() ? -1 : it->second;
}

json CausalGraph::to_json() const {
  json nodes = json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"id", n.id}, {"predicates", n.predicates}, {"label", n.label}, {"event", n.event}});
  }
  json edges = json::array();
  for (const auto& e : edges_) edges.push_back({{"from", e.from}, {"to", e.to}, {"event", e.event}});
  return {{"nodes", nodes}, {"edges", edges}};
}

std::string CausalGraph::to_dot() const {
  std::string out = "digraph causal {\n  rankdir=LR;\n  node [shape=box];\n";
  for (const auto& n : nodes_) {
    std::string label = n.label;
    for (const auto& p : n.predicates) label += "\n" + describe_predicate(parse_canonical_predicate(p));
    out += "  n" + std::to_string(n.id) + " [label=\"" + dot_escape(label) + "\"];\n";
  }
  for (const auto& e : edges_) {
    out += "  n" + std::to_string(e.from) + " -> n" + std::to_string(e.to) + " [label=\"" + std::to_string(e.event) +
           "\"];\n";
  }
  out += "}\n";
  return out;
}

CausalGraph graph_from_json(const json& j) {
  std::vector<GraphNode> nodes;
  for (const auto& n : j.at("nodes")) {
    nodes.push_back({n.at("id").get<int>(), n.value("predicates", std::vector<std::string>{}),
                     n.value("label", std::string()), n.value("event", 0)});
  }
  std::vector<GraphEdge> edges;
  for (const auto& e : j.at("edges")) {
    edges.push_back({e.at("from").get<int>(), e.at("to").get<int>(), e.value("event", 0)});
  }
  return CausalGraph::from_parts(std::move(nodes), std::move(edges));
}

CausalGraph build_graph(const std::vector<KeyEvent>& events) {
  if (events.empty()) throw GraphError("cannot build a causal graph from zero events");
  std::vector<GraphNode> nodes;
  std::map<std::vector<std::string>, int> by_state;
  nodes.push_back({0, canonical_set(events.front().preconditions), "initial", 0});
  by_state[nodes.back().predicates] = 0;

  std::vector<int> post_node(events.size());
  std::vector<std::vector<std::string>> post(events.size()), pre(events.size());
  for (std::size_t k = 0; k < events.size(); ++k) {
    const KeyEvent& e = events[k];
    post[k] = canonical_set(e.effects);
    pre[k] = canonical_set(e.preconditions);
    if (post[k].empty()) throw GraphError("event " + std::to_string(e.index) + " has no effects");
    auto it = by_state.find(post[k]);
    if (it != by_state.end()) {
      post_node[k] = it->second;
    } else {
      const int id = static_cast<int>(nodes.size());
      std::string label = e.result.empty() ? e.effects_text : e.result;
      nodes.push_back({id, post[k], label, e.index});
      by_state[post[k]] = id;
      post_node[k] = id;
    }
  }

  std::vector<GraphEdge> edges;
  std::set<std::pair<int, int>> seen;
  auto add = [&](int from, int to, int event) {
    if (seen.insert({from, to}).second) edges.push_back({from, to, event});
  };
  const std::vector<std::string>& initial = nodes.front().predicates;
  for (std::size_t k = 0; k < events.size(); ++k) {
    const int event = events[k].index;
    add(k == 0 ? 0 : post_node[k - 1], post_node[k], event);
    if (k > 0 && intersects(initial, pre[k])) add(0, post_node[k], event);
    for (std::size_t j = 0; j + 1 < k; ++j) {
      if (intersects(post[j], pre[k])) add(post_node[j], post_node[k], event);
    }
  }
  return CausalGraph::from_parts(std::move(nodes), std::move(edges));
}

// ---------------------------------------------------------------------------

std::string_view to_string(TransitionVerdict v) {
  switch (v) {
    case TransitionVerdict::valid: return "valid";
    case TransitionVerdict::unmatched_state: return "unmatched-state";
    case TransitionVerdict::no_path: return "no-path";
  }
  return "unknown";
}

int match_state(const CausalGraph& g, const std::vector<std::string>& query) {
  int best = -1;
  double best_score = 0.0;
  int best_event = 0;
  for (const auto& n : g.nodes()) {
    const double s = jaccard(n.predicates, query);
    if (s <= 0.0) continue;
    if (best == -1 || s > best_score || (s == best_score && n.event < best_event)) {
      best = n.id;
      best_score = s;
      best_event = n.event;
    }
  }
  return best;
}

TransitionResult validate_transition(const CausalGraph& g, const StateTransition& tr) {
  TransitionResult r;
  r.pre_node = match_state(g, canonical_set(tr.pre));
  r.post_node = match_state(g, canonical_set(tr.post));
  if (r.pre_node < 0 || r.post_node < 0) {
    r.verdict = TransitionVerdict::unmatched_state;
    r.reason = r.pre_node < 0 ? "pre-state matches no graph node" : "post-state matches no graph node";
    return r;
  }
  if (g.reachable(r.pre_node, r.post_node)) {
    r.verdict = TransitionVerdict::valid;
    return r;
  }
  r.verdict = TransitionVerdict::no_path;
  r.reason = "no path from node " + std::to_string(r.pre_node) + " to node " + std::to_string(r.post_node);
  return r;
}

}  // namespace logistory
