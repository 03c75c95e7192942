#include <CLI11.hpp>

#include <iostream>

#include "commands.hpp"

using namespace logistory::cli;

namespace {

void add_backend_options(CLI::App* app, BackendOptions& b) {
  app->add_option("--config", b.config, "Engine config (JSON)");
  app->add_option("--mock", b.mock, "Fixture directory; binds every backend role to the mock backend");
  app->add_option("--templates", b.templates, "Directory of prompt template overrides");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logic-aware story visualization and evaluation"};
  app.require_subcommand(1);
  int code = kOk;

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Validate a benchmark dataset");
  validate->add_option("dataset", validate_path, "Dataset (JSON array or JSON lines)")->required();
  validate->callback([&] { code = cmd_validate(validate_path, std::cout, std::cerr); });

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Generate one story's panels");
  add_backend_options(run, run_args.backends);
  run->add_option("--story", run_args.story, "Story id");
  run->add_option("--dataset", run_args.dataset, "Dataset path");
  run->add_option("--out", run_args.out, "Run directory")->required();
  run->add_flag("--resume", run_args.resume, "Continue an interrupted run in --out");
  run->callback([&] { code = cmd_run(run_args, std::cout, std::cerr); });

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Evaluate one run directory");
  add_backend_options(eval, eval_args.backends);
  eval->add_option("--run", eval_args.run, "Run directory")->required();
  eval->add_option("--dataset", eval_args.dataset, "Dataset path")->required();
  eval->add_option("--story", eval_args.story, "Story id (default: from run.json)");
  eval->add_option("--method", eval_args.method, "Method label recorded in the report");
  eval->add_option("--out", eval_args.out, "Report path (default: <run>/eval_report.json)");
  eval->callback([&] { code = cmd_eval(eval_args, std::cout, std::cerr); });

  EvalBatchArgs batch_args;
  auto* batch = app.add_subcommand("eval-batch", "Evaluate several runs; writes reports.jsonl and summary.csv");
  add_backend_options(batch, batch_args.backends);
  batch->add_option("--dataset", batch_args.dataset, "Dataset path")->required();
  batch->add_option("--out", batch_args.out, "Output directory")->required();
  batch->add_option("runs", batch_args.runs, "Run directories, optionally label=dir")->required();
  batch->callback([&] { code = cmd_eval_batch(batch_args, std::cout, std::cerr); });

  auto* stats = app.add_subcommand("stats", "Agreement, correlation and saturation statistics");
  stats->require_subcommand(1);
  std::string ratings_path, agreement_format = "csv";
  auto* agreement = stats->add_subcommand("agreement", "Ordinal Krippendorff alpha per dimension");
  agreement->add_option("--ratings", ratings_path, "ratings.jsonl")->required();
  agreement->add_option("--format", agreement_format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  agreement->callback([&] { code = cmd_stats_agreement(ratings_path, agreement_format, std::cout, std::cerr); });

  CorrelateArgs corr_args;
  auto* correlate = stats->add_subcommand("correlate", "Pearson r between automatic and human scores");
  correlate->add_option("--auto", corr_args.auto_csv, "Automatic scores CSV")->required();
  correlate->add_option("--human", corr_args.human_csv, "Human scores CSV")->required();
  correlate->add_option("--pair", corr_args.pairs, "Column pair auto=human (repeatable)");
  correlate->add_option("--exclude", corr_args.exclude, "Method to leave out (repeatable)");
  correlate->callback([&] { code = cmd_stats_correlate(corr_args, std::cout, std::cerr); });

  std::string sat_reports, sat_plan;
  auto* saturation = stats->add_subcommand("saturation", "Kendall tau-b of subset rankings against the full set");
  saturation->add_option("--reports", sat_reports, "reports.jsonl or a directory holding it")->required();
  saturation->add_option("--plan", sat_plan, "Subset plan JSON (see plan-subsets)")->required();
  saturation->callback([&] { code = cmd_stats_saturation(sat_reports, sat_plan, std::cout, std::cerr); });

  ServeArgs serve_args;
  auto* serve = app.add_subcommand("serve", "Run the annotation HTTP service");
  add_backend_options(serve, serve_args.backends);
  serve->add_option("--dataset", serve_args.dataset, "Dataset path")->required();
  serve->add_option("--host", serve_args.host, "Bind address");
  serve->add_option("--port", serve_args.port, "Port");
  serve->callback([&] { code = cmd_serve(serve_args, std::cout, std::cerr); });

  PlanSubsetsArgs plan_args;
  auto* plan = app.add_subcommand("plan-subsets", "Nested difficulty-stratified story subsets");
  plan->add_option("--dataset", plan_args.dataset, "Dataset path")->required();
  plan->add_option("--sizes", plan_args.sizes, "Subset sizes")->delimiter(',');
  plan->add_option("--seed", plan_args.seed, "Shuffle seed");
  plan->add_option("--out", plan_args.out, "Output JSON (default: stdout)");
  plan->callback([&] { code = cmd_plan_subsets(plan_args, std::cout, std::cerr); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kIoError;
  }
  return code;
}
