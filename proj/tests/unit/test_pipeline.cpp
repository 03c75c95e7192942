#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logistory/pipeline.hpp"
#include "test_support.hpp"

using namespace logistory;
using namespace logistory::testing;

namespace {

std::vector<TraceAction> actions_for(const RunResult& r, int panel) {
  std::vector<TraceAction> out;
  for (const auto& e : r.trace) {
    if (e.panel == panel) out.push_back(e.action);
  }
  return out;
}

RunResult run_with(std::function<double(int, int)> psi, const std::filesystem::path& dir, int panels = 2) {
  auto backend = scripted_pipeline_backend(panels, std::move(psi));
  const BackendRegistry reg = registry_with(backend);
  const TemplateLibrary templates;
  return StoryPipeline(reg, templates).run(crow_story(), dir);
}

}  // namespace

TEST_CASE("threshold routing") {
  const RefinementPolicy p;
  CHECK(decide(0.0, p) == Branch::regenerate);
  CHECK(decide(0.39, p) == Branch::regenerate);
  CHECK(decide(0.4, p) == Branch::edit);
  CHECK(decide(0.69, p) == Branch::edit);
  CHECK(decide(0.7, p) == Branch::accept);
  CHECK(decide(1.0, p) == Branch::accept);
}

TEST_CASE("policy validation and JSON") {
  RefinementPolicy p;
  CHECK_NOTHROW(p.validate());
  p.tau1 = 0.8;
  CHECK_THROWS(p.validate());
  p = RefinementPolicy{};
  p.max_edits = -1;
  CHECK_THROWS(p.validate());
  const json j = RefinementPolicy{0.3, 0.6, 1, 3};
  const auto back = j.get<RefinementPolicy>();
  CHECK(back.tau1 == 0.3);
  CHECK(back.max_edits == 3);
  CHECK_THROWS(json({{"tau1", 0.4}, {"tau3", 0.9}}).get<RefinementPolicy>());
}

TEST_CASE("low score regenerates, then accepts") {
  TempDir tmp;
  const auto r = run_with([](int panel, int call) { return panel == 1 ? (call == 0 ? 0.3 : 0.8) : 0.9; },
                          tmp / "run");
  CHECK(actions_for(r, 1) == std::vector<TraceAction>{TraceAction::draft, TraceAction::scored,
                                                      TraceAction::regenerated, TraceAction::scored,
                                                      TraceAction::accepted});
  CHECK(r.trace[1].decision == "regenerate");
  CHECK(r.images.at(0).revision == 1);
  CHECK(r.complete);
}

TEST_CASE("middling score is verified and edited") {
  TempDir tmp;
  const auto r = run_with([](int panel, int call) { return panel == 1 ? (call == 0 ? 0.5 : 0.75) : 0.9; },
                          tmp / "run");
  CHECK(actions_for(r, 1) == std::vector<TraceAction>{TraceAction::draft, TraceAction::scored, TraceAction::verified,
                                                      TraceAction::edited, TraceAction::scored,
                                                      TraceAction::accepted});
  const auto& verified = r.trace[2];
  CHECK(verified.instruction == "Show the fox more clearly.");
  CHECK(verified.detail.at("instruction_source") == "backend");
  CHECK(verified.detail.contains("transition"));
  CHECK(r.images.at(0).origin == ImageOrigin::edited);
}

TEST_CASE("a panel stuck in the edit band is accepted with a flag") {
  TempDir tmp;
  const auto r = run_with([](int panel, int) { return panel == 1 ? 0.5 : 0.9; }, tmp / "run");
  const auto acts = actions_for(r, 1);
  CHECK(acts.back() == TraceAction::accepted_with_flag);
  CHECK(std::count(acts.begin(), acts.end(), TraceAction::edited) == 2);
  REQUIRE(r.flags.size() == 1);
  CHECK(r.flags[0].at("panel") == 1);
  CHECK(r.complete);
}

TEST_CASE("regeneration budget escalates to editing") {
  TempDir tmp;
  const auto r = run_with([](int panel, int call) { return panel == 1 ? (call < 3 ? 0.1 : 0.95) : 0.9; },
                          tmp / "run");
  const auto acts = actions_for(r, 1);
  CHECK(std::count(acts.begin(), acts.end(), TraceAction::regenerated) == 2);
  CHECK(std::count(acts.begin(), acts.end(), TraceAction::edited) == 1);
  bool escalated = false;
  for (const auto& e : r.trace) escalated = escalated || (e.detail.is_object() && e.detail.value("escalated", false));
  CHECK(escalated);
  CHECK(acts.back() == TraceAction::accepted);
}

TEST_CASE("run directory layout") {
  TempDir tmp;
  const auto r = run_with([](int, int) { return 0.9; }, tmp / "run", 3);
  for (const char* name : {"run.json", "plan.json", "graph.json", "graph.dot", "trace.jsonl", "calls.jsonl",
                           "final/p1.ppm", "final/p3.ppm", "panels/p2_r0.ppm"}) {
    CHECK_MESSAGE(std::filesystem::exists(tmp / "run" / name), name);
  }
  const json run = json::parse(read_text(tmp / "run" / "run.json"));
  CHECK(run.at("status") == "complete");
  CHECK(run.at("run_id") == r.run_id);
  CHECK(r.images.size() == 3);
  const json summary = run_summary_json(r);
  CHECK(summary.at("run_id") == r.run_id);
}

TEST_CASE("run refuses a directory that already holds a run") {
  TempDir tmp;
  run_with([](int, int) { return 0.9; }, tmp / "run");
  CHECK_THROWS_AS(run_with([](int, int) { return 0.9; }, tmp / "run"), RunError);
}

TEST_CASE("missing roles are reported before any work") {
  BackendRegistry reg;
  const TemplateLibrary templates;
  TempDir tmp;
  CHECK_THROWS_AS(StoryPipeline(reg, templates).run(crow_story(), tmp / "run"), BackendError);
  CHECK_FALSE(std::filesystem::exists(tmp / "run" / "run.json"));
}

TEST_CASE("config fingerprint follows bindings and policy") {
  auto backend = scripted_pipeline_backend(1, [](int, int) { return 0.9; });
  const BackendRegistry reg = registry_with(backend);
  const RefinementPolicy p;
  RefinementPolicy q;
  q.tau2 = 0.75;
  CHECK(config_fingerprint(reg, p) == config_fingerprint(reg, p));
  CHECK(config_fingerprint(reg, p) != config_fingerprint(reg, q));
}

TEST_CASE("percentiles interpolate between order statistics") {
  CHECK(percentile({1, 2, 3, 4, 5}, 50) == doctest::Approx(3.0));
  CHECK(percentile({1, 2, 3, 4}, 90) == doctest::Approx(3.7));
  CHECK(percentile({10, 0}, 10) == doctest::Approx(1.0));
  CHECK(percentile({7}, 33) == 7.0);
  CHECK_THROWS(percentile({}, 50));
  CHECK_THROWS(percentile({1.0}, 101));
}

TEST_CASE("threshold calibration from ratings") {
  std::vector<CalibrationSample> s = {{0.1, 1}, {0.2, 1.5}, {0.3, 1}, {0.5, 3},
                                      {0.8, 5}, {0.9, 4.5}, {0.95, 5}};
  const auto c = calibrate_thresholds(s);
  CHECK(c.low_count == 3);
  CHECK(c.high_count == 3);
  CHECK(c.tau1 == doctest::Approx(0.28));
  CHECK(c.tau2 == doctest::Approx(0.82));
  CHECK_THROWS(calibrate_thresholds({{0.5, 3}}));
}
