// Acceptance checks. Prints one PASS/FAIL line per criterion; the exit status
// is non-zero when any selected criterion fails.
//
//   logistory_acceptance            all criteria
//   logistory_acceptance 3 7        only criteria 3 and 7

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <httplib.h>

#include "logistory/annotation.hpp"
#include "logistory/causal_graph.hpp"
#include "logistory/config.hpp"
#include "logistory/dataset.hpp"
#include "logistory/eval.hpp"
#include "logistory/pipeline.hpp"
#include "logistory/stats.hpp"
#include "test_support.hpp"

using namespace logistory;
using namespace logistory::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Branch table

Outcome criterion_branch_table() {
  const auto t0 = Clock::now();
  const std::vector<double> psis = {0.0, 0.39, 0.4, 0.69, 0.7, 1.0};
  const std::vector<Branch> want = {Branch::regenerate, Branch::regenerate, Branch::edit,
                                    Branch::edit,       Branch::accept,     Branch::accept};
  const RefinementPolicy policy;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < psis.size(); ++i) {
    if (decide(psis[i], policy) != want[i]) {
      problems.push_back("decide(" + fmt(psis[i], 2) + ") = " + std::string(to_string(decide(psis[i], policy))));
    }
  }

  // One panel per psi; the first score of panel t is psis[t-1], later scores accept.
  const int panels = static_cast<int>(psis.size());
  auto backend = scripted_pipeline_backend(panels, [&](int panel, int call) {
    return call == 0 ? psis[static_cast<std::size_t>(panel - 1)] : 1.0;
  });
  BackendRegistry reg = registry_with(backend);
  TemplateLibrary templates;
  TempDir tmp;
  StoryPipeline pipeline(reg, templates);
  const RunResult result = pipeline.run(crow_story(), tmp / "run");

  const std::map<Branch, TraceAction> follow = {{Branch::regenerate, TraceAction::regenerated},
                                                {Branch::edit, TraceAction::verified},
                                                {Branch::accept, TraceAction::accepted}};
  std::vector<std::string> observed;
  for (int t = 1; t <= panels; ++t) {
    std::vector<TraceEvent> evs;
    for (const auto& e : result.trace) {
      if (e.panel == t) evs.push_back(e);
    }
    auto first_score = std::find_if(evs.begin(), evs.end(), [](const TraceEvent& e) { return e.action == TraceAction::scored; });
    if (first_score == evs.end() || std::next(first_score) == evs.end()) {
      problems.push_back("panel " + std::to_string(t) + ": no scored event followed by an action");
      continue;
    }
    const Branch expect = want[static_cast<std::size_t>(t - 1)];
    observed.push_back(first_score->decision);
    if (first_score->decision != to_string(expect) || std::next(first_score)->action != follow.at(expect)) {
      problems.push_back("panel " + std::to_string(t) + ": decision " + first_score->decision + " then " +
                         std::string(to_string(std::next(first_score)->action)));
    }
    if (evs.back().action != TraceAction::accepted) problems.push_back("panel " + std::to_string(t) + " not accepted");
  }
  const double secs = seconds_since(t0);
  if (secs >= 5.0) problems.push_back("took " + fmt(secs, 2) + " s");
  Outcome o;
  o.pass = problems.empty();
  o.detail = "pipeline decisions {" + [&] {
    std::string s;
    for (const auto& d : observed) s += (s.empty() ? "" : ", ") + d;
    return s;
  }() + "} in " + fmt(secs, 3) + " s";
  for (const auto& p : problems) o.detail += "; " + p;
  return o;
}

// ---------------------------------------------------------------------------
// 2. CausalScore

std::vector<EventScore> scores_for(const std::vector<double>& values, const std::vector<double>& weights) {
  std::vector<EventScore> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    EventScore s;
    s.event_index = static_cast<int>(i + 1);
    s.value = values[i];
    s.weight = weights[i];
    out.push_back(s);
  }
  return out;
}

Outcome criterion_causal_score() {
  const StoryRecord crow = crow_story();
  std::vector<double> w;
  for (const auto& e : crow.causal_event_chain) w.push_back(e.weight);
  std::vector<std::string> problems;
  if (w != std::vector<double>{0.3, 0.5, 0.2}) problems.push_back("fixture weights are not (0.3, 0.5, 0.2)");
  const double all = causal_score(scores_for({1, 1, 1}, w));
  const double mid = causal_score(scores_for({1, 0, 1}, w));
  if (all != 1.0) problems.push_back("(1,1,1) -> " + fmt(all, 17));
  if (mid != 0.5) problems.push_back("(1,0,1) -> " + fmt(mid, 17));

  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 12);
  double worst = 0.0;
  for (int draw = 0; draw < 1000; ++draw) {
    const std::size_t n = static_cast<std::size_t>(len(rng));
    std::vector<double> weights(n), a(n), b(n), mix(n);
    double total = 0.0;
    for (auto& x : weights) total += (x = u(rng));
    for (auto& x : weights) x /= total;
    const double alpha = u(rng), beta = u(rng);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = u(rng);
      b[i] = u(rng);
      mix[i] = alpha * a[i] + beta * b[i];
    }
    const double lhs = causal_score(scores_for(mix, weights));
    const double rhs = alpha * causal_score(scores_for(a, weights)) + beta * causal_score(scores_for(b, weights));
    long double direct = 0.0L;
    for (std::size_t i = 0; i < n; ++i) direct += static_cast<long double>(a[i]) * weights[i];
    worst = std::max({worst, std::fabs(lhs - rhs),
                      std::fabs(causal_score(scores_for(a, weights)) - static_cast<double>(direct))});
  }
  if (worst > 1e-12) problems.push_back("linearity error " + std::to_string(worst));
  Outcome o;
  o.pass = problems.empty();
  o.detail = "(1,1,1)=" + fmt(all, 1) + " (1,0,1)=" + fmt(mid, 1) + ", max linearity error " + [&] {
    std::ostringstream s;
    s << worst;
    return s.str();
  }() + " over 1000 draws";
  for (const auto& p : problems) o.detail += "; " + p;
  return o;
}

// ---------------------------------------------------------------------------
// 3. Pearson from the published score table

double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

Outcome criterion_pearson() {
  const auto t0 = Clock::now();
  const ScoreTable automatic = parse_score_table(read_text(fixture("scores/automatic.csv")), "automatic.csv");
  const ScoreTable human = parse_score_table(read_text(fixture("scores/human.csv")), "human.csv");
  struct Target {
    std::string name, auto_col, human_col;
    double reported;
  };
  const std::vector<Target> targets = {
      {"instance consistency", "instance_consistency", "instance_consistency", 0.959},
      {"narrative causality", "narrative_causality", "narrative_causality_vqa", 0.978},
      {"story readability", "story_readability", "story_readability", 0.909},
      {"perceptual quality", "aesthetic_quality", "aesthetic_appeal", 0.695},
  };
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& t : targets) pairs.push_back({t.auto_col, t.human_col});

  struct Subset {
    std::string name;
    std::set<std::string> excluded;
  };
  const std::vector<Subset> subsets = {{"all nine methods", {}}, {"without Ours", {"Ours"}}};
  Outcome o;
  std::vector<std::string> lines;
  std::string matching;
  bool oracle_ok = true;
  for (const auto& s : subsets) {
    const auto results = correlate_tables(automatic, human, pairs, s.excluded);
    bool all_ok = true;
    std::string line = s.name + ":";
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const auto& r = results.at(i);
      std::vector<double> x, y;
      for (const auto& m : r.methods) {
        x.push_back(automatic.values.at(m).at(targets[i].auto_col));
        y.push_back(human.values.at(m).at(targets[i].human_col));
      }
      if (std::fabs(pearson_oracle(x, y) - r.r) > 1e-9) oracle_ok = false;
      const bool ok = std::fabs(r.r - targets[i].reported) <= 0.02;
      all_ok = all_ok && ok;
      line += " " + targets[i].name + " " + fmt(r.r, 3) + (ok ? "" : " (reported " + fmt(targets[i].reported, 3) + ", off)");
    }
    lines.push_back(line);
    if (all_ok && matching.empty()) matching = s.name;
  }
  const double secs = seconds_since(t0);
  o.pass = !matching.empty() && oracle_ok && secs < 1.0;
  o.detail = matching.empty() ? "no subset reproduces all four values" : "matching subset: " + matching;
  for (const auto& l : lines) o.detail += "; " + l;
  if (!oracle_ok) o.detail += "; library r disagrees with the direct formula";
  return o;
}

// ---------------------------------------------------------------------------
// 4. Transition validation vs DFS reachability

bool dfs_reachable(const std::vector<std::vector<int>>& adj, int from, int to) {
  std::vector<bool> seen(adj.size(), false);
  std::vector<int> stack(adj[static_cast<std::size_t>(from)].begin(), adj[static_cast<std::size_t>(from)].end());
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    if (v == to) return true;
    if (seen[static_cast<std::size_t>(v)]) continue;
    seen[static_cast<std::size_t>(v)] = true;
    for (int w : adj[static_cast<std::size_t>(v)]) stack.push_back(w);
  }
  return false;
}

Outcome criterion_graph_oracle() {
  std::mt19937_64 rng(7);
  std::size_t checked = 0, mismatched = 0, reachable_pairs = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 10)(rng);
    const double density = std::uniform_real_distribution<double>(0.1, 0.7)(rng);
    // Random labelling so node ids are not already in topological order.
    std::vector<int> label(static_cast<std::size_t>(n));
    std::iota(label.begin(), label.end(), 0);
    std::shuffle(label.begin(), label.end(), rng);
    std::vector<GraphNode> nodes;
    std::vector<GraphEdge> edges;
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      GraphNode node;
      node.id = label[static_cast<std::size_t>(i)];
      node.predicates = {canonical_predicate({"node", "id", "n" + std::to_string(node.id)})};
      node.label = "n" + std::to_string(node.id);
      nodes.push_back(node);
      for (int j = i + 1; j < n; ++j) {
        if (std::bernoulli_distribution(density)(rng)) {
          const int a = label[static_cast<std::size_t>(i)], b = label[static_cast<std::size_t>(j)];
          edges.push_back({a, b, j});
          adj[static_cast<std::size_t>(a)].push_back(b);
        }
      }
    }
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const CausalGraph g = CausalGraph::from_parts(nodes, edges);
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        StateTransition tr;
        tr.pre = {{"node", "id", "n" + std::to_string(a)}};
        tr.action = "step";
        tr.post = {{"node", "id", "n" + std::to_string(b)}};
        const TransitionResult r = validate_transition(g, tr);
        const bool expect = dfs_reachable(adj, a, b);
        reachable_pairs += expect;
        ++checked;
        if (r.valid() != expect || r.pre_node != a || r.post_node != b) ++mismatched;
      }
    }
  }
  Outcome o;
  o.pass = mismatched == 0;
  o.detail = std::to_string(checked) + " node pairs over 500 DAGs (" + std::to_string(reachable_pairs) +
             " reachable), " + std::to_string(mismatched) + " mismatches";
  return o;
}

// ---------------------------------------------------------------------------
// 5. Kendall tau-b and Krippendorff alpha oracles

double tau_b_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  long long c = 0, d = 0, ties_x = 0, ties_y = 0;
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = x[i] - x[j], dy = y[i] - y[j];
      ties_x += dx == 0;
      ties_y += dy == 0;
      if (dx != 0 && dy != 0) ((dx > 0) == (dy > 0) ? c : d) += 1;
    }
  }
  const double n0 = static_cast<double>(n) * (static_cast<double>(n) - 1) / 2.0;
  return static_cast<double>(c - d) / std::sqrt((n0 - static_cast<double>(ties_x)) * (n0 - static_cast<double>(ties_y)));
}

bool all_tied(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

// Alpha from explicit enumeration of value pairs; no coincidence matrix.
std::optional<double> alpha_oracle(const RatingTable& t) {
  std::vector<std::vector<double>> units;
  for (const auto& row : t.cells) {
    std::vector<double> vals;
    for (const auto& c : row) {
      if (c) vals.push_back(*c);
    }
    if (vals.size() >= 2) units.push_back(vals);
  }
  std::vector<double> pool;
  for (const auto& u : units) pool.insert(pool.end(), u.begin(), u.end());
  const double n = static_cast<double>(pool.size());
  if (pool.size() < 2) return std::nullopt;
  std::map<double, double> count;
  for (double v : pool) count[v] += 1.0;
  auto delta2 = [&](double a, double b) {
    if (a == b) return 0.0;
    const double lo = std::min(a, b), hi = std::max(a, b);
    double s = 0.0;
    for (const auto& [v, k] : count) {
      if (v >= lo && v <= hi) s += k;
    }
    s -= (count[lo] + count[hi]) / 2.0;
    return s * s;
  };
  double d_o = 0.0;
  for (const auto& u : units) {
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      for (std::size_t j = 0; j < u.size(); ++j) {
        if (i != j) sum += delta2(u[i], u[j]);
      }
    }
    d_o += sum / static_cast<double>(u.size() - 1);
  }
  d_o /= n;
  double d_e = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (i != j) d_e += delta2(pool[i], pool[j]);
    }
  }
  d_e /= n * (n - 1.0);
  if (d_e == 0.0) return 1.0;
  return 1.0 - d_o / d_e;
}

Outcome criterion_stats_oracles() {
  std::mt19937_64 rng(99);
  std::size_t tau_cases = 0;
  double tau_worst = 0.0;
  for (std::size_t n = 2; n <= 6; ++n) {
    for (int rep = 0; rep < 6; ++rep) {
      // x and the multiset permuted for y both carry random ties.
      std::vector<double> x(n), base(n);
      const int levels = std::uniform_int_distribution<int>(1, static_cast<int>(n))(rng);
      for (auto& v : x) v = std::uniform_int_distribution<int>(1, std::max(levels, 2))(rng);
      for (auto& v : base) v = std::uniform_int_distribution<int>(1, levels)(rng);
      std::sort(base.begin(), base.end());
      if (all_tied(x) || all_tied(base)) continue;
      do {
        const double got = kendall_tau_b(x, base);
        tau_worst = std::max(tau_worst, std::fabs(got - tau_b_oracle(x, base)));
        ++tau_cases;
      } while (std::next_permutation(base.begin(), base.end()));
    }
  }

  std::size_t alpha_cases = 0;
  double alpha_worst = 0.0;
  auto check_table = [&](const RatingTable& t) {
    const auto want = alpha_oracle(t);
    if (!want) return;
    const double got = krippendorff_alpha_ordinal(t);
    alpha_worst = std::max(alpha_worst, std::fabs(got - *want));
    ++alpha_cases;
  };
  // Every table up to 3x3 over {missing, 1, 2}.
  for (std::size_t items = 1; items <= 3; ++items) {
    for (std::size_t raters = 1; raters <= 3; ++raters) {
      const std::size_t cells = items * raters;
      std::size_t total = 1;
      for (std::size_t i = 0; i < cells; ++i) total *= 3;
      for (std::size_t code = 0; code < total; ++code) {
        RatingTable t;
        t.scale = {1, 2};
        t.cells.assign(items, std::vector<std::optional<double>>(raters));
        std::size_t c = code;
        for (std::size_t k = 0; k < cells; ++k, c /= 3) {
          if (c % 3 != 0) t.cells[k / raters][k % raters] = static_cast<double>(c % 3);
        }
        check_table(t);
      }
    }
  }
  // Random tables on a 1-5 scale for every shape up to 5x5.
  for (std::size_t items = 1; items <= 5; ++items) {
    for (std::size_t raters = 1; raters <= 5; ++raters) {
      for (int rep = 0; rep < 200; ++rep) {
        RatingTable t;
        t.scale = {1, 2, 3, 4, 5};
        t.cells.assign(items, std::vector<std::optional<double>>(raters));
        for (auto& row : t.cells) {
          for (auto& cell : row) {
            if (std::bernoulli_distribution(0.85)(rng)) cell = std::uniform_int_distribution<int>(1, 5)(rng);
          }
        }
        check_table(t);
      }
    }
  }
  RatingTable perfect;
  perfect.scale = {1, 2, 3, 4, 5};
  perfect.cells = {{1, 1, 1}, {3, 3, 3}, {5, 5, std::nullopt}, {2, 2, 2}};
  const double perfect_alpha = krippendorff_alpha_ordinal(perfect);

  Outcome o;
  o.pass = tau_cases > 0 && tau_worst <= 1e-12 && alpha_cases > 0 && alpha_worst <= 1e-9 && perfect_alpha == 1.0;
  std::ostringstream s;
  s << "tau-b " << tau_cases << " permutations, max error " << tau_worst << "; alpha " << alpha_cases
    << " tables, max error " << alpha_worst << "; perfect agreement alpha = " << perfect_alpha;
  o.detail = s.str();
  return o;
}

// ---------------------------------------------------------------------------
// 6. Dataset fidelity

Outcome criterion_dataset() {
  std::vector<std::string> problems;
  const Dataset ds = load_dataset(fixture("crow_story.json"));
  if (ds.size() != 1) problems.push_back("expected one record");
  const StoryRecord& crow = ds.records().at(0);
  if (crow.title != "The Crow and the Pitcher" || crow.level != Level::easy || crow.causal_event_chain.size() != 3) {
    problems.push_back("unexpected fixture content");
  }
  if (!validate_story_record(crow).empty()) problems.push_back("fixture does not validate");
  const StoryRecord via_json = json(crow).get<StoryRecord>();
  if (!(via_json == crow)) problems.push_back("JSON round trip changed the record");
  TempDir tmp;
  save_dataset(ds, tmp / "out.jsonl");
  if (!(load_dataset(tmp / "out.jsonl") == ds)) problems.push_back("save/load round trip changed the dataset");

  auto perturbed = [&](double eps) {
    StoryRecord r = crow;
    r.causal_event_chain.back().weight += eps;
    try {
      Dataset d({r});
      return true;
    } catch (const DatasetError&) {
      return false;
    }
  };
  const bool accepts_1e5 = perturbed(1e-5);
  const bool accepts_1e7 = perturbed(1e-7);
  if (accepts_1e5) problems.push_back("weight sum off by 1e-5 accepted");
  if (!accepts_1e7) problems.push_back("weight sum off by 1e-7 rejected");
  Outcome o;
  o.pass = problems.empty();
  o.detail = std::string("round trips ok; 1e-5 ") + (accepts_1e5 ? "accepted" : "rejected") + ", 1e-7 " +
             (accepts_1e7 ? "accepted" : "rejected");
  for (const auto& p : problems) o.detail += "; " + p;
  return o;
}

// ---------------------------------------------------------------------------
// 7. End-to-end mock run

json strip_times(json j) {
  if (j.is_object()) {
    for (const char* k : {"timestamp", "created_at", "completed_at"}) j.erase(k);
    for (auto& [_, v] : j.items()) v = strip_times(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_times(v);
  }
  return j;
}

std::string normalized_file(const std::filesystem::path& p) {
  const std::string raw = read_text(p);
  const auto ext = p.extension().string();
  if (ext == ".json") return strip_times(json::parse(raw)).dump();
  if (ext == ".jsonl") {
    std::string out;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) out += strip_times(json::parse(line)).dump() + "\n";
    }
    return out;
  }
  return raw;
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[std::filesystem::relative(e.path(), dir).string()] = normalized_file(e.path());
  }
  return files;
}

Outcome criterion_end_to_end() {
  const auto t0 = Clock::now();
  std::vector<std::string> problems;
  const StoryRecord crow = crow_story();
  EngineConfig cfg;
  bind_mock_backends(cfg, fixture("mock_crow"));
  TemplateLibrary templates;
  TempDir tmp;

  auto one_run = [&](const std::filesystem::path& dir) {
    StoryPipeline pipeline(cfg.backends, templates);
    RunResult r = pipeline.run(crow, dir);
    Evaluator evaluator(cfg.backends, templates);
    EvalInput in{crow, load_final_images(dir), "logistory"};
    const EvalReport report = evaluator.evaluate(in);
    write_text(dir / "eval_report.json", json(report).dump(2));
    return std::make_pair(r, report);
  };
  const auto [run, report] = one_run(tmp / "a");

  const std::size_t panels = run.plan.panels.size();
  std::size_t finals = 0;
  for (const auto& e : std::filesystem::directory_iterator(tmp / "a" / "final")) finals += e.is_regular_file();
  if (panels == 0 || finals != panels || run.images.size() != panels) {
    problems.push_back(std::to_string(finals) + " final images for " + std::to_string(panels) + " panels");
  }
  std::map<int, TraceAction> last;
  for (const auto& e : RunStore(tmp / "a").read_trace()) last[e.panel] = e.action;
  std::size_t terminal = 0;
  for (const auto& [panel, action] : last) {
    terminal += action == TraceAction::accepted || action == TraceAction::accepted_with_flag;
  }
  if (terminal != panels || last.size() != panels) problems.push_back("not every panel ends accepted");
  std::size_t populated = 0;
  for (const auto& m : metric_names()) populated += report.metric(m).has_value();
  if (populated != 6) problems.push_back(std::to_string(populated) + "/6 metrics populated");

  one_run(tmp / "b");
  const auto a = snapshot(tmp / "a"), b = snapshot(tmp / "b");
  std::vector<std::string> differing;
  for (const auto& [name, content] : a) {
    auto it = b.find(name);
    if (it == b.end() || it->second != content) differing.push_back(name);
  }
  for (const auto& [name, _] : b) {
    if (!a.count(name)) differing.push_back(name);
  }
  if (!differing.empty()) problems.push_back("rerun differs in " + differing.front());
  const double secs = seconds_since(t0);
  if (secs >= 30.0) problems.push_back("took " + fmt(secs, 1) + " s");

  std::map<std::string, int> actions;
  for (const auto& e : run.trace) ++actions[std::string(to_string(e.action))];
  Outcome o;
  o.pass = problems.empty();
  o.detail = std::to_string(panels) + " panels, " + std::to_string(a.size()) + " files identical on rerun, " +
             std::to_string(actions["regenerated"]) + " regenerations, " + std::to_string(actions["edited"]) +
             " edits, " + std::to_string(populated) + "/6 metrics, " + fmt(secs, 2) + " s";
  for (const auto& p : problems) o.detail += "; " + p;
  return o;
}

// ---------------------------------------------------------------------------
// 8. Saturation harness

Outcome criterion_saturation() {
  const std::vector<std::string> methods = {"m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8", "m9"};
  const std::vector<std::size_t> sizes = {12, 24, 36, 48, 60};
  // Subset rankings equal the full ranking with the last d methods reversed;
  // d shrinks with size, so discordant pairs can only decrease.
  const std::vector<std::size_t> tail = {7, 5, 3, 2, 0};
  std::mt19937_64 rng(3);
  SubsetScores scores;
  for (const auto& metric : metric_names()) {
    std::vector<double> full(methods.size());
    double v = 5.0;
    for (auto& f : full) f = (v -= std::uniform_real_distribution<double>(0.05, 0.5)(rng));
    for (std::size_t s = 0; s < sizes.size(); ++s) {
      std::vector<double> sub = full;
      std::reverse(sub.end() - static_cast<std::ptrdiff_t>(tail[s]), sub.end());
      for (std::size_t m = 0; m < methods.size(); ++m) scores[sizes[s]][methods[m]][metric] = sub[m];
    }
  }
  const auto points = saturation_analysis(scores);
  std::map<std::string, std::vector<SaturationPoint>> by_metric;
  for (const auto& p : points) by_metric[p.metric].push_back(p);
  std::vector<std::string> problems;
  for (const auto& metric : metric_names()) {
    auto& ps = by_metric[metric];
    std::sort(ps.begin(), ps.end(), [](const auto& a, const auto& b) { return a.size < b.size; });
    if (ps.size() != sizes.size()) {
      problems.push_back(metric + ": " + std::to_string(ps.size()) + " points");
      continue;
    }
    if (ps.back().tau != 1.0) problems.push_back(metric + ": tau at full size " + fmt(ps.back().tau, 6));
    for (std::size_t i = 1; i < ps.size(); ++i) {
      if (ps[i].tau < ps[i - 1].tau) problems.push_back(metric + ": tau decreases at " + std::to_string(ps[i].size));
    }
    for (const auto& p : ps) {
      std::vector<double> x, y;
      for (const auto& m : methods) {
        x.push_back(scores.at(60).at(m).at(metric));
        y.push_back(scores.at(p.size).at(m).at(metric));
      }
      if (std::fabs(tau_b_oracle(x, y) - p.tau) > 1e-12) problems.push_back(metric + ": tau disagrees with counting");
    }
  }
  std::string curve;
  for (const auto& p : by_metric[metric_names().front()]) curve += (curve.empty() ? "" : ", ") + fmt(p.tau, 3);
  Outcome o;
  o.pass = problems.empty();
  o.detail = "tau by size for " + metric_names().front() + ": " + curve;
  for (const auto& p : problems) o.detail += "; " + p;
  return o;
}

// ---------------------------------------------------------------------------
// 9. Annotation API

Outcome criterion_annotation_api() {
  std::vector<std::string> problems;
  TempDir tmp;
  const Dataset ds = load_dataset(fixture("crow_story.json"));
  const std::vector<std::string> labels = {"SecretMethodAlpha", "SecretMethodBeta"};
  AnnotationConfig cfg;
  cfg.data_dir = tmp / "annotation";
  for (const auto& label : labels) {
    make_sequence_dir(tmp / label, 1, 3, label);
    cfg.sequences.push_back({tmp / label, label, 1});
  }
  TemplateLibrary templates;
  auto leaks = [&](const std::string& body) {
    if (body.find("method_label") != std::string::npos) return true;
    for (const auto& l : labels) {
      if (body.find(l) != std::string::npos) return true;
    }
    return false;
  };
  std::size_t responses = 0;
  int first_status = 0, dup_status = 0, bad_status = 0;
  {
    AnnotationService service(cfg, ds, templates);
    AnnotationServer server(service);
    const int port = server.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);
    auto check = [&](const httplib::Result& res, const std::string& what) {
      if (!res) {
        problems.push_back(what + ": no response");
        return 0;
      }
      ++responses;
      if (leaks(res->body)) problems.push_back(what + " reveals the method");
      return res->status;
    };
    auto tasks_res = client.Get("/api/tasks?annotator=ann1&limit=100");
    check(tasks_res, "GET /api/tasks");
    const json tasks = tasks_res ? json::parse(tasks_res->body) : json::object();
    const std::size_t task_count = tasks.value("tasks", json::array()).size();
    if (task_count != labels.size() * all_dimensions().size()) {
      problems.push_back("expected " + std::to_string(labels.size() * all_dimensions().size()) + " tasks, got " +
                         std::to_string(task_count));
    }
    std::string rating_task, vqa_task;
    for (const auto& t : tasks.value("tasks", json::array())) {
      for (const auto& img : t.at("images")) check(client.Get(img.at("url").get<std::string>()), "image");
      if (t.at("dimension") == "instance_consistency" && rating_task.empty()) rating_task = t.at("task_id");
      if (t.at("dimension") == "narrative_causality_vqa" && vqa_task.empty()) vqa_task = t.at("task_id");
    }
    const json rating = {{"task_id", rating_task}, {"annotator_id", "ann1"}, {"dimension", "instance_consistency"},
                         {"item_ref", nullptr}, {"value", 4}};
    first_status = check(client.Post("/api/ratings", rating.dump(), "application/json"), "first POST");
    dup_status = check(client.Post("/api/ratings", rating.dump(), "application/json"), "duplicate POST");
    const json maybe = {{"task_id", vqa_task}, {"annotator_id", "ann1"}, {"dimension", "narrative_causality_vqa"},
                        {"item_ref", 1}, {"value", "maybe"}};
    bad_status = check(client.Post("/api/ratings", maybe.dump(), "application/json"), "invalid POST");
    check(client.Get("/api/progress?annotator=ann1"), "GET /api/progress");
    server.stop();
  }
  if (first_status != 201) problems.push_back("first rating returned " + std::to_string(first_status));
  if (dup_status != 409) problems.push_back("duplicate rating returned " + std::to_string(dup_status));
  if (bad_status != 422) problems.push_back("VQA value 'maybe' returned " + std::to_string(bad_status));

  // Simulate a crash mid-write, then restart.
  const auto ratings = cfg.data_dir / "ratings.jsonl";
  const std::string intact = read_text(ratings);
  {
    std::ofstream out(ratings, std::ios::app | std::ios::binary);
    out << R"({"annotator_id":"ann1","story_id":1,"dimen)";
  }
  std::size_t quarantined = 0, kept = 0;
  {
    AnnotationService restarted(cfg, ds, templates);
    quarantined = restarted.quarantined_on_start();
    kept = restarted.records().size();
  }
  if (quarantined != 1) problems.push_back(std::to_string(quarantined) + " lines quarantined");
  if (kept != 1) problems.push_back(std::to_string(kept) + " ratings kept after restart");
  if (read_text(ratings) != intact) problems.push_back("ratings file not restored to its intact lines");
  if (!std::filesystem::exists(ratings.string() + ".quarantine")) problems.push_back("no quarantine file");

  Outcome o;
  o.pass = problems.empty();
  o.detail = std::to_string(responses) + " responses checked for method identity; duplicate -> " +
             std::to_string(dup_status) + "; truncated line quarantined: " + std::to_string(quarantined);
  for (const auto& p : problems) o.detail += "; " + p;
  return o;
}

struct Criterion {
  int id;
  std::string title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "refinement branch table", criterion_branch_table},
      {2, "causal score arithmetic", criterion_causal_score},
      {3, "Pearson correlations from the published score table", criterion_pearson},
      {4, "transition validation vs DFS reachability", criterion_graph_oracle},
      {5, "Kendall tau-b and Krippendorff alpha oracles", criterion_stats_oracles},
      {6, "dataset fidelity", criterion_dataset},
      {7, "end-to-end mock run", criterion_end_to_end},
      {8, "saturation harness", criterion_saturation},
      {9, "annotation API contract", criterion_annotation_api},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << c.title << "  (" << o.detail
              << ")" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
