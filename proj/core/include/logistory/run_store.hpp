#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "logistory/domain.hpp"

namespace logistory {

class RunError : public Error {
 public:
  using Error::Error;
};

// Appends whole lines to a file and fsyncs after each one.
class LineAppender {
 public:
  explicit LineAppender(const std::filesystem::path& path);
  ~LineAppender();
  LineAppender(const LineAppender&) = delete;
  LineAppender& operator=(const LineAppender&) = delete;

  void append(const std::string& line);  // adds the trailing newline

 private:
  int fd_ = -1;
  std::filesystem::path path_;
  std::mutex mu_;
};

enum class TraceAction { draft, scored, regenerated, verified, edited, accepted, accepted_with_flag };

std::string_view to_string(TraceAction a);
TraceAction parse_trace_action(std::string_view s);

struct TraceEvent {
  int seq = 0;
  int panel = 0;
  TraceAction action = TraceAction::draft;
  int revision = -1;  // -1 when not applicable
  std::optional<double> psi;
  std::string decision;  // on scored events: regenerate | edit | accept | flag
  std::string justification;
  std::string caption;
  std::string instruction;
  std::string artifact;
  std::string fingerprint;
  std::string flag;
  json detail;  // verifier output and other structured extras
  std::string timestamp;
};

void to_json(json& j, const TraceEvent& e);
void from_json(const json& j, TraceEvent& e);

// Layout of a run directory:
//   run.json, plan.json, graph.json, graph.dot, trace.jsonl, calls.jsonl,
//   panels/p<t>_r<rev>.<ext>, final/p<t>.<ext>
class RunStore {
 public:
  explicit RunStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::filesystem::path path(const std::string& name) const { return dir_ / name; }

  static std::string panel_artifact(int panel, int revision, const std::string& ext);
  static std::string final_artifact(int panel, const std::string& ext);

  bool exists(const std::string& name) const;
  json read_json(const std::string& name) const;
  void write_json(const std::string& name, const json& doc) const;  // atomic replace
  void write_text(const std::string& name, const std::string& text) const;

  // Parses trace.jsonl; throws RunError naming the first invalid line.
  std::vector<TraceEvent> read_trace() const;
  void append_trace(const TraceEvent& e);
  void append_call(const json& record);

 private:
  std::filesystem::path dir_;
  std::unique_ptr<LineAppender> trace_;
  std::unique_ptr<LineAppender> calls_;
};

std::string utc_timestamp();

}  // namespace logistory
