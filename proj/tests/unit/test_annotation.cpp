#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "logistory/annotation.hpp"
#include "test_support.hpp"

using namespace logistory;
using namespace logistory::testing;

namespace {

RatingRecord rec(const std::string& who, Dimension d, json value, std::optional<int> item = std::nullopt,
                 const std::string& method = "M") {
  RatingRecord r;
  r.annotator_id = who;
  r.story_id = 1;
  r.method_label = method;
  r.dimension = d;
  r.item_ref = item;
  r.value = std::move(value);
  return r;
}

struct Study {
  TempDir tmp;
  Dataset ds = load_dataset(fixture("crow_story.json"));
  TemplateLibrary templates;
  AnnotationConfig cfg;

  Study() {
    cfg.data_dir = tmp / "annotation";
    for (const char* label : {"Alpha", "Beta"}) {
      make_sequence_dir(tmp / label, 1, 3, label);
      cfg.sequences.push_back({tmp / label, label, 1});
    }
  }
};

std::string task_of(const AnnotationService& svc, const std::string& dimension) {
  const auto r = svc.tasks("ann", dimension, 100);
  return r.body.at("tasks").at(0).at("task_id");
}

}  // namespace

TEST_CASE("rating validation") {
  CHECK(validate_rating(rec("a", Dimension::instance_consistency, 3), 3).empty());
  CHECK(validate_rating(rec("a", Dimension::narrative_causality_vqa, "yes", 2), 3).empty());
  CHECK(validate_rating(rec("a", Dimension::instance_consistency, 6), 3).size() == 1);
  CHECK(validate_rating(rec("a", Dimension::instance_consistency, 3.5), 3).size() == 1);
  CHECK(validate_rating(rec("a", Dimension::instance_consistency, 3, 1), 3).at(0).field == "item_ref");
  CHECK(validate_rating(rec("a", Dimension::narrative_causality_vqa, "maybe", 1), 3).at(0).field == "value");
  CHECK(validate_rating(rec("a", Dimension::narrative_causality_vqa, "no", 4), 3).at(0).field == "item_ref");
  CHECK(validate_rating(rec("a", Dimension::narrative_causality_vqa, "no"), 3).size() == 1);
  CHECK(validate_rating(rec(" ", Dimension::story_readability, 1), 3).at(0).field == "annotator_id");
}

TEST_CASE("records round trip through JSON") {
  auto r = rec("a", Dimension::narrative_causality_vqa, "yes", 2);
  r.task_id = "t1";
  const auto back = json(r).get<RatingRecord>();
  CHECK(back.key() == r.key());
  CHECK(back.task_id == "t1");
  CHECK(parse_dimension("aesthetic_appeal") == Dimension::aesthetic_appeal);
  CHECK_THROWS_AS(parse_dimension("perceptual"), DomainError);
}

TEST_CASE("rating tables group items by story, method and event") {
  const std::vector<RatingRecord> rs = {rec("a", Dimension::instance_consistency, 4),
                                        rec("b", Dimension::instance_consistency, 5),
                                        rec("a", Dimension::instance_consistency, 2, std::nullopt, "N"),
                                        rec("a", Dimension::narrative_causality_vqa, "yes", 1),
                                        rec("b", Dimension::narrative_causality_vqa, "no", 1)};
  const auto tables = rating_tables(rs);
  const auto& ic = tables.at(Dimension::instance_consistency);
  REQUIRE(ic.cells.size() == 2);
  CHECK(ic.cells[0] == std::vector<std::optional<double>>{4.0, 5.0});
  CHECK(ic.cells[1] == std::vector<std::optional<double>>{2.0, std::nullopt});
  const auto& vqa = tables.at(Dimension::narrative_causality_vqa);
  CHECK(vqa.scale == std::vector<double>{0.0, 1.0});
  CHECK(vqa.cells.at(0) == std::vector<std::optional<double>>{1.0, 0.0});
}

TEST_CASE("loading ratings quarantines broken lines") {
  TempDir tmp;
  const auto path = tmp / "ratings.jsonl";
  CHECK(load_ratings(path).records.empty());
  const std::string good = json(rec("a", Dimension::instance_consistency, 4)).dump() + "\n";
  write_text(path, good + "not json\n" + R"({"annotator_id":"a","story_id":1,"dim)");
  const auto loaded = load_ratings(path);
  CHECK(loaded.records.size() == 1);
  CHECK(loaded.quarantined == 2);
  CHECK(read_text(path) == good);
  CHECK(read_text(path.string() + ".quarantine").find("not json") != std::string::npos);
}

TEST_CASE("config from JSON") {
  TempDir tmp;
  make_sequence_dir(tmp / "runs" / "a", 7, 2, "a");
  const json j = {{"data_dir", "ann"},
                  {"batch_size", 2},
                  {"dimensions", {"instance_consistency"}},
                  {"runs", {{{"dir", "runs/a"}, {"method", "Ours"}}}}};
  const auto c = annotation_config_from_json(j, tmp.path());
  CHECK(c.data_dir == tmp / "ann");
  CHECK(c.batch_size == 2);
  CHECK(c.dimensions == std::vector<Dimension>{Dimension::instance_consistency});
  REQUIRE(c.sequences.size() == 1);
  CHECK(c.sequences[0].story_id == 7);
  CHECK_THROWS(annotation_config_from_json({{"batch_size", 0}}, tmp.path()));
  CHECK_THROWS(annotation_config_from_json({{"token_env", "LOGISTORY_TEST_UNSET_TOKEN"}}, tmp.path()));
}

TEST_CASE("tasks are blind and cover every dimension") {
  Study s;
  AnnotationService svc(s.cfg, s.ds, s.templates);
  const auto r = svc.tasks("ann", std::nullopt, 100);
  CHECK(r.status == 200);
  CHECK(r.body.at("tasks").size() == 8);
  CHECK(r.body.at("remaining") == 8);
  const std::string dump = r.body.dump();
  CHECK(dump.find("Alpha") == std::string::npos);
  CHECK(dump.find("Beta") == std::string::npos);
  CHECK(svc.tasks("ann", std::nullopt, std::nullopt).body.at("tasks").size() == 4);
  CHECK(svc.tasks("ann", "story_readability", 100).body.at("tasks").size() == 2);
  CHECK(svc.tasks("ann", "bogus", 100).status == 422);
  CHECK(svc.tasks("", std::nullopt, 100).status == 422);
  // Order is per annotator and reproducible.
  CHECK(svc.tasks("ann", std::nullopt, 100).body == r.body);

  const json vqa = svc.tasks("ann", "narrative_causality_vqa", 1).body.at("tasks").at(0);
  CHECK(vqa.at("items").size() == 3);
  CHECK(vqa.at("items").at(0).at("question").get<std::string>().find("Crow tries to drink") != std::string::npos);
  CHECK(vqa.at("scale") == json::array({"yes", "no"}));
}

TEST_CASE("task ids do not reveal the method") {
  Study s;
  AnnotationService svc(s.cfg, s.ds, s.templates);
  Study other;
  other.cfg.secret = "another secret";
  AnnotationService svc2(other.cfg, other.ds, other.templates);
  const auto a = svc.task_ids();
  const auto b = svc2.task_ids();
  CHECK(a.size() == 8);
  CHECK(std::set<std::string>(a.begin(), a.end()).size() == 8);
  CHECK(a != b);
}

TEST_CASE("images are served by task and position") {
  Study s;
  AnnotationService svc(s.cfg, s.ds, s.templates);
  const std::string id = task_of(svc, "aesthetic_appeal");
  const auto img = svc.image(id, 1);
  CHECK(img.status == 200);
  CHECK(img.media_type == "image/x-portable-pixmap");
  CHECK(img.bytes.rfind("P6", 0) == 0);
  CHECK(svc.image(id, 4).status == 404);
  CHECK(svc.image("nope", 1).status == 404);
}

TEST_CASE("submissions: created, duplicate, invalid, unknown") {
  Study s;
  AnnotationService svc(s.cfg, s.ds, s.templates);
  const std::string ic = task_of(svc, "instance_consistency");
  const std::string vqa = task_of(svc, "narrative_causality_vqa");
  const json good = {{"task_id", ic}, {"annotator_id", "ann"}, {"dimension", "instance_consistency"}, {"value", 4}};
  CHECK(svc.submit(good.dump()).status == 201);
  CHECK(svc.submit(good.dump()).status == 409);

  json leaky = good;
  leaky["method_label"] = "Alpha";
  CHECK(svc.submit(leaky.dump()).status == 422);
  json wrong_dim = good;
  wrong_dim["dimension"] = "aesthetic_appeal";
  CHECK(svc.submit(wrong_dim.dump()).status == 422);
  CHECK(svc.submit("{not json").status == 422);
  json unknown = good;
  unknown["task_id"] = "nope";
  CHECK(svc.submit(unknown.dump()).status == 404);

  const json maybe = {{"task_id", vqa}, {"annotator_id", "ann"}, {"dimension", "narrative_causality_vqa"},
                      {"item_ref", 1}, {"value", "maybe"}};
  const auto bad = svc.submit(maybe.dump());
  CHECK(bad.status == 422);
  CHECK(bad.body.at("errors").at(0).at("field") == "value");
  for (int k = 1; k <= 3; ++k) {
    json yes = maybe;
    yes["item_ref"] = k;
    yes["value"] = k == 2 ? "no" : "yes";
    CHECK(svc.submit(yes.dump()).status == 201);
  }

  const auto records = svc.records();
  REQUIRE(records.size() == 4);
  CHECK(records[0].value == 4);
  CHECK((records[0].method_label == "Alpha" || records[0].method_label == "Beta"));

  const auto p = svc.progress("ann").body.at("dimensions");
  CHECK(p.at("instance_consistency").at("completed_tasks") == 1);
  CHECK(p.at("narrative_causality_vqa").at("rated_items") == 3);
  CHECK(p.at("narrative_causality_vqa").at("total_items") == 6);
  CHECK(svc.tasks("ann", "instance_consistency", 100).body.at("tasks").size() == 1);

  // Ratings survive a restart and still block duplicates.
  AnnotationService again(s.cfg, s.ds, s.templates);
  CHECK(again.records().size() == 4);
  CHECK(again.submit(good.dump()).status == 409);
  const json unblind = json::parse(read_text(s.cfg.data_dir / "unblind.json"));
  CHECK(unblind.at(ic).contains("method_label"));
}

TEST_CASE("bearer token check") {
  Study s;
  s.cfg.token = "t0k";
  AnnotationService svc(s.cfg, s.ds, s.templates);
  CHECK(svc.authorized("Bearer t0k"));
  CHECK_FALSE(svc.authorized(""));
  CHECK_FALSE(svc.authorized("Bearer wrong"));
  Study open;
  AnnotationService anyone(open.cfg, open.ds, open.templates);
  CHECK(anyone.authorized(""));
}
