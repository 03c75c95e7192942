#include <benchmark/benchmark.h>

#include "logistory/causal_graph.hpp"

using namespace logistory;

namespace {

// A chain of n events, each moving one token to the next stop.
std::vector<KeyEvent> chain(int n) {
  std::vector<KeyEvent> events;
  for (int k = 1; k <= n; ++k) {
    KeyEvent e;
    e.index = k;
    e.actor = "Fox";
    e.action = "moves";
    e.target = "stop";
    e.preconditions = {{"fox", "location", "stop " + std::to_string(k - 1)}};
    e.effects = {{"fox", "location", "stop " + std::to_string(k)}};
    events.push_back(e);
  }
  return events;
}

}  // namespace

static void BM_BuildGraph(benchmark::State& state) {
  const auto events = chain(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_graph(events));
}
BENCHMARK(BM_BuildGraph)->Arg(10)->Arg(50)->Arg(200);

static void BM_ValidateTransition(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CausalGraph g = build_graph(chain(n));
  StateTransition tr;
  tr.pre = {{"fox", "location", "stop 0"}};
  tr.action = "moves";
  tr.post = {{"fox", "location", "stop " + std::to_string(n)}};
  for (auto _ : state) benchmark::DoNotOptimize(validate_transition(g, tr));
}
BENCHMARK(BM_ValidateTransition)->Arg(10)->Arg(50)->Arg(200);
