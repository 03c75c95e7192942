#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace logistory::cli {

// Exit codes: 0 success, 1 validation or evaluation failure, 2 IO or config failure.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kIoError = 2;

struct BackendOptions {
  std::string config;     // engine config JSON; optional when mock is set
  std::string mock;       // fixture directory bound to every role
  std::string templates;  // override directory for prompt templates
};

int cmd_validate(const std::string& dataset, std::ostream& out, std::ostream& err);

struct RunArgs {
  BackendOptions backends;
  std::int64_t story = 0;
  std::string dataset;
  std::string out;
  bool resume = false;
};
int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err);

struct EvalArgs {
  BackendOptions backends;
  std::string run;
  std::string dataset;
  std::optional<std::int64_t> story;
  std::string method = "logistory";
  std::string out;  // defaults to <run>/eval_report.json
};
int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err);

struct EvalBatchArgs {
  BackendOptions backends;
  std::string dataset;
  std::string out;
  std::vector<std::string> runs;  // "dir" or "label=dir"
};
int cmd_eval_batch(const EvalBatchArgs& a, std::ostream& out, std::ostream& err);

int cmd_stats_agreement(const std::string& ratings, const std::string& format, std::ostream& out, std::ostream& err);

struct CorrelateArgs {
  std::string auto_csv;
  std::string human_csv;
  std::vector<std::string> pairs;  // "auto=human"
  std::vector<std::string> exclude;
};
int cmd_stats_correlate(const CorrelateArgs& a, std::ostream& out, std::ostream& err);

int cmd_stats_saturation(const std::string& reports, const std::string& plan, std::ostream& out, std::ostream& err);

struct ServeArgs {
  BackendOptions backends;
  std::string dataset;
  std::string host = "127.0.0.1";
  int port = 8080;
};
int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err);

struct PlanSubsetsArgs {
  std::string dataset;
  std::vector<std::size_t> sizes;
  std::uint64_t seed = 0;
  std::string out;
};
int cmd_plan_subsets(const PlanSubsetsArgs& a, std::ostream& out, std::ostream& err);

}  // namespace logistory::cli
