#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "logistory/run_store.hpp"
#include "test_support.hpp"

using namespace logistory;
using namespace logistory::testing;

TEST_CASE("artifact names") {
  CHECK(RunStore::panel_artifact(3, 1, "png") == "panels/p3_r1.png");
  CHECK(RunStore::final_artifact(2, "ppm") == "final/p2.ppm");
}

TEST_CASE("line appender writes whole lines") {
  TempDir tmp;
  {
    LineAppender a(tmp / "log.jsonl");
    a.append("{\"a\":1}");
    a.append("{\"a\":2}");
  }
  {
    LineAppender a(tmp / "log.jsonl");
    a.append("{\"a\":3}");
  }
  CHECK(read_text(tmp / "log.jsonl") == "{\"a\":1}\n{\"a\":2}\n{\"a\":3}\n");
}

TEST_CASE("trace events round trip") {
  TempDir tmp;
  RunStore store(tmp.path());
  TraceEvent e;
  e.seq = 1;
  e.panel = 2;
  e.action = TraceAction::scored;
  e.revision = 0;
  e.psi = 0.55;
  e.decision = "edit";
  e.justification = "Pig2 looks too calm for the situation.";
  e.detail = json{{"missing", json::array()}};
  e.timestamp = utc_timestamp();
  store.append_trace(e);
  TraceEvent f;
  f.seq = 2;
  f.panel = 2;
  f.action = TraceAction::accepted_with_flag;
  f.revision = 0;
  f.flag = "edit budget exhausted";
  store.append_trace(f);

  const auto back = store.read_trace();
  REQUIRE(back.size() == 2);
  CHECK(back[0].psi == 0.55);
  CHECK(back[0].decision == "edit");
  CHECK(back[0].justification == e.justification);
  CHECK(back[1].action == TraceAction::accepted_with_flag);
  CHECK_FALSE(back[1].psi.has_value());
  CHECK(back[1].flag == "edit budget exhausted");
  for (auto a : {TraceAction::draft, TraceAction::scored, TraceAction::regenerated, TraceAction::verified,
                 TraceAction::edited, TraceAction::accepted, TraceAction::accepted_with_flag}) {
    CHECK(parse_trace_action(to_string(a)) == a);
  }
  CHECK_THROWS(parse_trace_action("rejected"));
}

TEST_CASE("a corrupt trace line is reported by line number") {
  TempDir tmp;
  RunStore store(tmp.path());
  TraceEvent e;
  e.seq = 1;
  e.panel = 1;
  e.revision = 0;
  store.append_trace(e);
  {
    std::ofstream out(tmp / "trace.jsonl", std::ios::app);
    out << "{\"seq\":2,\"panel\":1,\"act";
  }
  try {
    store.read_trace();
    FAIL("expected RunError");
  } catch (const RunError& err) {
    CHECK(std::string(err.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("json documents are replaced atomically") {
  TempDir tmp;
  RunStore store(tmp.path());
  CHECK_FALSE(store.exists("run.json"));
  store.write_json("run.json", json{{"status", "planning"}});
  store.write_json("run.json", json{{"status", "running"}});
  CHECK(store.read_json("run.json").at("status") == "running");
  store.write_text("graph.dot", "digraph {}\n");
  CHECK(read_text(tmp / "graph.dot") == "digraph {}\n");
  CHECK(utc_timestamp().back() == 'Z');
}
