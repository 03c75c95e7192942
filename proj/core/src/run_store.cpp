#include "logistory/run_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "logistory/backends.hpp"

namespace logistory {

LineAppender::LineAppender(const std::filesystem::path& path) : path_(path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) throw Error("cannot open " + path.string() + ": " + std::strerror(errno));
}

LineAppender::~LineAppender() {
  if (fd_ >= 0) ::close(fd_);
}

void LineAppender::append(const std::string& line) {
  std::lock_guard<std::mutex> lock(mu_);
  std::string buf = line;
  buf.push_back('\n');
  const char* p = buf.data();
  std::size_t left = buf.size();
  while (left > 0) {
    const ssize_t n = ::write(fd_, p, left);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error("write to " + path_.string() + " failed: " + std::strerror(errno));
    }
    p += n;
    left -= static_cast<std::size_t>(n);
  }
  if (::fsync(fd_) != 0) throw Error("fsync of " + path_.string() + " failed: " + std::strerror(errno));
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::pair<TraceAction, std::string_view> kActions[] = {
    {TraceAction::draft, "draft"},
    {TraceAction::scored, "scored"},
    {TraceAction::regenerated, "regenerated"},
    {TraceAction::verified, "verified"},
    {TraceAction::edited, "edited"},
    {TraceAction::accepted, "accepted"},
    {TraceAction::accepted_with_flag, "accepted_with_flag"},
};

}  // namespace

std::string_view to_string(TraceAction a) {
  for (const auto& [k, name] : kActions) {
    if (k == a) return name;
  }
  return "unknown";
}

TraceAction parse_trace_action(std::string_view s) {
  for (const auto& [k, name] : kActions) {
    if (name == s) return k;
  }
  throw RunError("unknown trace action '" + std::string(s) + "'");
}

void to_json(json& j, const TraceEvent& e) {
  j = json{{"seq", e.seq}, {"panel", e.panel}, {"action", to_string(e.action)}};
  if (e.revision >= 0) j["revision"] = e.revision;
  if (e.psi) j["psi"] = *e.psi;
  if (!e.decision.empty()) j["decision"] = e.decision;
  if (!e.justification.empty()) j["justification"] = e.justification;
  if (!e.caption.empty()) j["caption"] = e.caption;
  if (!e.instruction.empty()) j["instruction"] = e.instruction;
  if (!e.artifact.empty()) j["artifact"] = e.artifact;
  if (!e.fingerprint.empty()) j["fingerprint"] = e.fingerprint;
  if (!e.flag.empty()) j["flag"] = e.flag;
  if (!e.detail.is_null()) j["detail"] = e.detail;
  j["timestamp"] = e.timestamp;
}

void from_json(const json& j, TraceEvent& e) {
  e.seq = j.at("seq").get<int>();
  e.panel = j.at("panel").get<int>();
  e.action = parse_trace_action(j.at("action").get<std::string>());
  e.revision = j.value("revision", -1);
  if (j.contains("psi")) e.psi = j.at("psi").get<double>();
  e.decision = j.value("decision", std::string());
  e.justification = j.value("justification", std::string());
  e.caption = j.value("caption", std::string());
  e.instruction = j.value("instruction", std::string());
  e.artifact = j.value("artifact", std::string());
  e.fingerprint = j.value("fingerprint", std::string());
  e.flag = j.value("flag", std::string());
  e.detail = j.contains("detail") ? j.at("detail") : json();
  e.timestamp = j.value("timestamp", std::string());
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------

RunStore::RunStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_ / "panels");
  std::filesystem::create_directories(dir_ / "final");
}

std::string RunStore::panel_artifact(int panel, int revision, const std::string& ext) {
  return "panels/p" + std::to_string(panel) + "_r" + std::to_string(revision) + "." + ext;
}

std::string RunStore::final_artifact(int panel, const std::string& ext) {
  return "final/p" + std::to_string(panel) + "." + ext;
}

bool RunStore::exists(const std::string& name) const { return std::filesystem::exists(dir_ / name); }

json RunStore::read_json(const std::string& name) const {
  const std::string content = read_file_bytes(dir_ / name);
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw RunError((dir_ / name).string() + ": " + e.what());
  }
}

void RunStore::write_json(const std::string& name, const json& doc) const {
  write_file_bytes(dir_ / name, doc.dump(2) + "\n");
}

void RunStore::write_text(const std::string& name, const std::string& text) const {
  write_file_bytes(dir_ / name, text);
}

std::vector<TraceEvent> RunStore::read_trace() const {
  std::vector<TraceEvent> out;
  const auto p = dir_ / "trace.jsonl";
  if (!std::filesystem::exists(p)) return out;
  std::ifstream in(p, std::ios::binary);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(json::parse(line).get<TraceEvent>());
    } catch (const std::exception& e) {
      throw RunError("corrupt trace: line " + std::to_string(lineno) + " is not a valid event: " + e.what());
    }
  }
  return out;
}

void RunStore::append_trace(const TraceEvent& e) {
  if (!trace_) trace_ = std::make_unique<LineAppender>(dir_ / "trace.jsonl");
  trace_->append(json(e).dump());
}

void RunStore::append_call(const json& record) {
  if (!calls_) calls_ = std::make_unique<LineAppender>(dir_ / "calls.jsonl");
  calls_->append(record.dump());
}

}  // namespace logistory
