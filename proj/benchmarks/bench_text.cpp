#include <benchmark/benchmark.h>

#include "logistory/predicates.hpp"
#include "logistory/prompt_template.hpp"

using namespace logistory;

static void BM_ExtractPredicates(benchmark::State& state) {
  EntitySet s;
  for (const char* c : {"Pig1", "Pig2", "Pig3", "Wolf"}) s.characters.push_back({c, EntityKind::character, ""});
  s.objects.push_back({"Pot", EntityKind::object, ""});
  const std::string caption =
      "The wolf is on the roof. All three pigs are inside the brick house. The pot is under the chimney. "
      "Pig3 has a ladle. The fire is burning.";
  for (auto _ : state) benchmark::DoNotOptimize(extract_predicates(caption, &s));
}
BENCHMARK(BM_ExtractPredicates);

static void BM_RenderMonitorPrompt(benchmark::State& state) {
  const TemplateLibrary lib;
  const PromptTemplate& t = lib.get("local_monitor");
  const std::map<std::string, std::string> values = {
      {"memory", "Panel 1: Pig1 builds a straw house.\nPanel 2: The wolf blows the straw house down."},
      {"caption", "Pig2 is relaxing in a newly built wooden house."}};
  for (auto _ : state) benchmark::DoNotOptimize(t.render(values));
}
BENCHMARK(BM_RenderMonitorPrompt);
