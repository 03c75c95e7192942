#include "commands.hpp"

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "logistory/annotation.hpp"
#include "logistory/config.hpp"
#include "logistory/dataset.hpp"
#include "logistory/eval.hpp"
#include "logistory/monitor.hpp"
#include "logistory/pipeline.hpp"
#include "logistory/stats.hpp"
#include "logistory/text.hpp"

namespace logistory::cli {

namespace {

namespace fs = std::filesystem;

class IoFailure : public Error {
 public:
  using Error::Error;
};

void require_file(const std::string& path, const std::string& what) {
  if (path.empty()) throw IoFailure(what + " path is required");
  if (!fs::is_regular_file(path)) throw IoFailure(what + " not found: " + path);
}

void require_dir(const std::string& path, const std::string& what) {
  if (!fs::is_directory(path)) throw IoFailure(what + " not found: " + path);
}

std::string read_text(const std::string& path, const std::string& what) {
  require_file(path, what);
  return read_file_bytes(path);
}

void write_text(const fs::path& path, const std::string& content) {
  try {
    write_file_bytes(path, content);
  } catch (const std::exception& e) {
    throw IoFailure(e.what());
  }
}

EngineConfig load_backends(const BackendOptions& b) {
  EngineConfig cfg;
  if (!b.config.empty()) {
    require_file(b.config, "config");
    cfg = load_engine_config(b.config);
  }
  if (!b.mock.empty()) {
    require_dir(b.mock, "mock fixture directory");
    bind_mock_backends(cfg, b.mock);
  }
  return cfg;
}

TemplateLibrary load_templates(const BackendOptions& b) {
  if (b.templates.empty()) return TemplateLibrary();
  require_dir(b.templates, "template directory");
  return TemplateLibrary(fs::path(b.templates));
}

Dataset open_dataset(const std::string& path) {
  require_file(path, "dataset");
  return load_dataset(path);
}

std::int64_t story_of_run(const fs::path& run_dir) {
  const fs::path p = run_dir / "run.json";
  require_file(p.string(), "run.json");
  try {
    return json::parse(read_file_bytes(p)).at("story_id").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw IoFailure(p.string() + ": " + e.what());
  }
}

void print_violations(const DatasetError& e, std::ostream& err) {
  err << "error: " << e.what() << "\n";
  for (const auto& v : e.violations()) err << "  " << v.field << " [" << v.rule << "] " << v.message << "\n";
}

// Maps exceptions to exit codes and prints one actionable line.
template <typename F>
int guarded(std::ostream& err, F body) {
  try {
    return body();
  } catch (const IoFailure& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kIoError;
  } catch (const TemplateError& e) {
    err << "template error: " << e.what() << "\n";
    return kIoError;
  } catch (const BackendError& e) {
    err << "backend error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    if (e.kind() == BackendErrorKind::not_configured) {
      err << "hint: add the role to \"roles\" in the config, or pass --mock <fixtures>\n";
    }
    return e.kind() == BackendErrorKind::not_configured || e.kind() == BackendErrorKind::auth ? kIoError : kFailure;
  } catch (const DatasetError& e) {
    print_violations(e, err);
    return kFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  } catch (const fs::filesystem_error& e) {
    err << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const json::exception& e) {
    err << "malformed JSON: " << e.what() << "\n";
    return kFailure;
  }
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

}  // namespace

int cmd_validate(const std::string& dataset, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Dataset ds = open_dataset(dataset);
    std::map<Level, int> by_level;
    for (const auto& r : ds.records()) ++by_level[r.level];
    out << "ok: " << ds.size() << " stories (" << by_level[Level::easy] << " easy, " << by_level[Level::medium]
        << " medium, " << by_level[Level::hard] << " hard)\n";
    return kOk;
  });
}

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    EngineConfig cfg = load_backends(a.backends);
    const TemplateLibrary templates = load_templates(a.backends);
    const PipelineOptions options = pipeline_options_from_json(cfg.pipeline);
    StoryPipeline pipeline(cfg.backends, templates, options);
    RunResult result;
    try {
      if (a.resume) {
        require_dir(a.out, "run directory");
        result = pipeline.resume(a.out);
      } else {
        const Dataset ds = open_dataset(a.dataset);
        result = pipeline.run(ds.at(a.story), a.out);
      }
    } catch (const BackendError& e) {
      if (e.kind() != BackendErrorKind::not_configured && fs::exists(fs::path(a.out) / "run.json")) {
        err << "run interrupted; continue with: logistory run --resume --out " << a.out << "\n";
      }
      throw;
    } catch (const MonitorError&) {
      err << "run interrupted; continue with: logistory run --resume --out " << a.out << "\n";
      throw;
    }
    out << run_summary_json(result).dump(2) << "\n";
    return kOk;
  });
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    require_dir(a.run, "run directory");
    const Dataset ds = open_dataset(a.dataset);
    EngineConfig cfg = load_backends(a.backends);
    const TemplateLibrary templates = load_templates(a.backends);
    const std::int64_t story_id = a.story ? *a.story : story_of_run(a.run);
    EvalInput in{ds.at(story_id), load_final_images(a.run), a.method};
    const Evaluator ev(cfg.backends, templates, eval_options_from_json(cfg.eval));
    const EvalReport report = ev.evaluate(in);
    const fs::path dest = a.out.empty() ? fs::path(a.run) / "eval_report.json" : fs::path(a.out);
    write_text(dest, json(report).dump(2) + "\n");
    out << json(report).dump(2) << "\n";
    for (const auto& f : report.flags) err << "note: " << f << "\n";
    for (const auto& [metric, msg] : report.errors) err << "error: " << msg << "\n";
    return report.errors.empty() ? kOk : kFailure;
  });
}

int cmd_eval_batch(const EvalBatchArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Dataset ds = open_dataset(a.dataset);
    EngineConfig cfg = load_backends(a.backends);
    const TemplateLibrary templates = load_templates(a.backends);
    const Evaluator ev(cfg.backends, templates, eval_options_from_json(cfg.eval));
    std::vector<EvalReport> reports;
    std::string lines;
    bool failed = false;
    for (const auto& spec : a.runs) {
      std::string label = "logistory";
      std::string dir = spec;
      if (const auto eq = spec.find('='); eq != std::string::npos) {
        label = spec.substr(0, eq);
        dir = spec.substr(eq + 1);
      }
      require_dir(dir, "run directory");
      EvalInput in{ds.at(story_of_run(dir)), load_final_images(dir), label};
      EvalReport r = ev.evaluate(in);
      for (const auto& [metric, msg] : r.errors) {
        err << "error: " << dir << ": " << msg << "\n";
        failed = true;
      }
      lines += json(r).dump() + "\n";
      reports.push_back(std::move(r));
    }
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "reports.jsonl", lines);
    const std::string csv = summary_csv(summarize_reports(reports));
    write_text(fs::path(a.out) / "summary.csv", csv);
    out << csv;
    return failed ? kFailure : kOk;
  });
}

int cmd_stats_agreement(const std::string& ratings, const std::string& format, std::ostream& out,
                        std::ostream& err) {
  return guarded(err, [&] {
    const std::string content = read_text(ratings, "ratings file");
    std::vector<RatingRecord> records;
    int lineno = 0;
    for (const auto& line : text::split_lines(content)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      try {
        records.push_back(json::parse(line).get<RatingRecord>());
      } catch (const std::exception& e) {
        err << "warning: " << ratings << ":" << lineno << " skipped: " << e.what() << "\n";
      }
    }
    json doc = json::object();
    std::ostringstream csv;
    csv << "dimension,alpha,items,raters\n";
    for (const auto& [dim, table] : rating_tables(records)) {
      const std::string name(to_string(dim));
      const std::size_t raters = table.cells.empty() ? 0 : table.cells.front().size();
      try {
        const double alpha = krippendorff_alpha_ordinal(table);
        doc[name] = {{"alpha", alpha}, {"items", table.cells.size()}, {"raters", raters}};
        csv << name << "," << fmt(alpha) << "," << table.cells.size() << "," << raters << "\n";
      } catch (const StatsError& e) {
        doc[name] = {{"alpha", nullptr}, {"error", e.what()}, {"items", table.cells.size()}, {"raters", raters}};
        csv << name << ",," << table.cells.size() << "," << raters << "\n";
        err << "warning: " << name << ": " << e.what() << "\n";
      }
    }
    out << (format == "json" ? doc.dump(2) + "\n" : csv.str());
    return kOk;
  });
}

int cmd_stats_correlate(const CorrelateArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const ScoreTable automatic = parse_score_table(read_text(a.auto_csv, "automatic scores"), a.auto_csv);
    const ScoreTable human = parse_score_table(read_text(a.human_csv, "human scores"), a.human_csv);
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& p : a.pairs) {
      const auto eq = p.find('=');
      if (eq == std::string::npos) throw IoFailure("--pair expects auto=human, got '" + p + "'");
      pairs.emplace_back(p.substr(0, eq), p.substr(eq + 1));
    }
    if (pairs.empty()) {
      // Same-named columns, plus the two names that differ between protocols.
      auto has = [](const ScoreTable& t, const std::string& c) {
        return std::find(t.columns.begin(), t.columns.end(), c) != t.columns.end();
      };
      for (const auto& c : automatic.columns) {
        if (has(human, c)) pairs.emplace_back(c, c);
      }
      for (const auto& [x, y] : std::vector<std::pair<std::string, std::string>>{
               {kMetricNarrativeCausality, "narrative_causality_vqa"}, {kMetricAestheticQuality, "aesthetic_appeal"}}) {
        if (has(automatic, x) && has(human, y)) pairs.emplace_back(x, y);
      }
    }
    if (pairs.empty()) throw StatsError("no column pairs to correlate; pass --pair auto=human");
    const std::set<std::string> excluded(a.exclude.begin(), a.exclude.end());
    out << "auto,human,n,r\n";
    for (const auto& c : correlate_tables(automatic, human, pairs, excluded)) {
      out << c.auto_column << "," << c.human_column << "," << c.methods.size() << "," << fmt(c.r) << "\n";
    }
    return kOk;
  });
}

int cmd_stats_saturation(const std::string& reports, const std::string& plan, std::ostream& out,
                         std::ostream& err) {
  return guarded(err, [&] {
    fs::path rp = reports;
    if (fs::is_directory(rp)) rp /= "reports.jsonl";
    require_file(rp.string(), "reports");
    const SaturationPlan sp = json::parse(read_text(plan, "subset plan")).get<SaturationPlan>();
    const auto points = saturation_analysis(subset_scores(read_reports_jsonl(rp), sp));
    out << saturation_csv(points);
    return kOk;
  });
}

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (a.backends.config.empty()) throw IoFailure("serve needs --config with an \"annotation\" section");
    EngineConfig cfg = load_backends(a.backends);
    const TemplateLibrary templates = load_templates(a.backends);
    const Dataset ds = open_dataset(a.dataset);
    AnnotationConfig ac = annotation_config_from_json(cfg.annotation, cfg.base_dir);
    AnnotationService service(std::move(ac), ds, templates);
    if (service.quarantined_on_start() > 0) {
      err << "warning: quarantined " << service.quarantined_on_start() << " unreadable rating line(s)\n";
    }
    AnnotationServer server(service);
    out << "annotation service on http://" << a.host << ":" << a.port << " (" << service.task_ids().size()
        << " tasks)" << std::endl;
    server.listen(a.host, a.port);
    return kOk;
  });
}

int cmd_plan_subsets(const PlanSubsetsArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Dataset ds = open_dataset(a.dataset);
    const auto sizes = a.sizes.empty() ? kDefaultSaturationSizes : a.sizes;
    const SaturationPlan plan = build_saturation_plan(ds, sizes, a.seed);
    const std::string doc = json(plan).dump(2) + "\n";
    if (a.out.empty()) {
      out << doc;
    } else {
      write_text(a.out, doc);
    }
    return kOk;
  });
}

}  // namespace logistory::cli
