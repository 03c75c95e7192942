#include "logistory/monitor.hpp"

#include <cctype>
#include <cstdlib>

#include "logistory/predicates.hpp"
#include "logistory/text.hpp"

namespace logistory {

void to_json(json& j, const MemoryEntry& e) {
  j = json{{"panel_index", e.panel_index}, {"caption", e.caption},       {"predicates", e.predicates},
           {"summary", e.summary},         {"summarized", e.summarized}, {"caption_failed", e.caption_failed}};
}

void from_json(const json& j, MemoryEntry& e) {
  e.panel_index = j.at("panel_index").get<int>();
  e.caption = j.value("caption", std::string());
  e.predicates = j.value("predicates", std::vector<StatePredicate>{});
  e.summary = j.value("summary", std::string());
  e.summarized = j.value("summarized", false);
  e.caption_failed = j.value("caption_failed", false);
}

std::string summarize_entry(const std::string& caption, const std::vector<StatePredicate>& predicates) {
  std::string first = text::trim(caption);
  const std::size_t stop = first.find_first_of(".!?");
  if (stop != std::string::npos) first = first.substr(0, stop + 1);
  std::vector<std::string> described;
  for (const auto& p : predicates) {
    if (!is_note(p)) described.push_back(describe_predicate(p));
  }
  std::string s = first;
  if (!described.empty()) s += " [" + text::join(described, "; ") + "]";
  return s.size() < caption.size() ? s : text::trim(caption);
}

namespace {

std::string entry_line(const MemoryEntry& e) {
  if (e.summarized) return "Panel " + std::to_string(e.panel_index) + " (summary): " + e.summary;
  return "Panel " + std::to_string(e.panel_index) + ": " + e.caption;
}

std::string render_entries(const std::vector<MemoryEntry>& entries) {
  if (entries.empty()) return std::string(kEmptyMemory);
  std::string out;
  for (const auto& e : entries) {
    if (!out.empty()) out.push_back('\n');
    out += entry_line(e);
  }
  return out;
}

// Cuts at a UTF-8 boundary and appends "...".
std::string shorten(const std::string& s, std::size_t keep) {
  if (s.size() <= keep) return s;
  while (keep > 0 && (static_cast<unsigned char>(s[keep]) & 0xC0) == 0x80) --keep;
  return s.substr(0, keep) + "...";
}

}  // namespace

MemoryBuffer::MemoryBuffer(std::size_t max_chars) : max_chars_(max_chars) {
  if (max_chars_ < kEmptyMemory.size()) throw MonitorError(MonitorError::Kind::budget, "memory budget too small");
}

void MemoryBuffer::append(MemoryEntry entry) {
  if (!entries_.empty() && entry.panel_index <= entries_.back().panel_index) {
    throw MonitorError(MonitorError::Kind::budget, "memory entries must have increasing panel indices");
  }
  if (entry.summary.empty()) entry.summary = summarize_entry(entry.caption, entry.predicates);
  std::vector<MemoryEntry> next = entries_;
  next.push_back(std::move(entry));
  for (auto& e : next) {
    if (render_entries(next).size() <= max_chars_) break;
    e.summarized = true;
  }
  for (auto& e : next) {
    std::size_t size = render_entries(next).size();
    if (size <= max_chars_) break;
    const std::size_t excess = size - max_chars_;
    const std::size_t keep = e.summary.size() > excess + 3 ? e.summary.size() - excess - 3 : 0;
    e.summary = shorten(e.summary, keep);
  }
  if (render_entries(next).size() > max_chars_) {
    throw MonitorError(MonitorError::Kind::budget, "memory budget of " + std::to_string(max_chars_) +
                                                       " characters cannot hold " + std::to_string(next.size()) +
                                                       " panels");
  }
  entries_ = std::move(next);
}

std::string MemoryBuffer::render() const { return render_entries(entries_); }

std::string render_context(const MemoryBuffer& buffer) { return buffer.render(); }

// ---------------------------------------------------------------------------

PlausibilityScore parse_score_reply(const std::string& reply) {
  const auto lines = text::split_lines(reply);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string line = text::strip_markdown(lines[i]);
    if (!text::starts_with_ci(line, "score")) continue;
    std::size_t p = 5;
    while (p < line.size() && line[p] == ' ') ++p;
    if (p >= line.size() || line[p] != ':') continue;
    ++p;
    while (p < line.size() && std::isspace(static_cast<unsigned char>(line[p]))) ++p;
    const std::size_t start = p;
    if (p < line.size() && (line[p] == '-' || line[p] == '+')) ++p;
    bool digits = false, dot = false;
    while (p < line.size() && (std::isdigit(static_cast<unsigned char>(line[p])) || (line[p] == '.' && !dot))) {
      if (line[p] == '.') {
        dot = true;
      } else {
        digits = true;
      }
      ++p;
    }
    if (!digits) {
      throw MonitorError(MonitorError::Kind::unparseable, "score line without a number: '" + line + "'");
    }
    if (p < line.size() && std::isalpha(static_cast<unsigned char>(line[p]))) {
      throw MonitorError(MonitorError::Kind::unparseable, "malformed score: '" + line + "'");
    }
    std::string number = line.substr(start, p - start);
    if (!number.empty() && number.back() == '.') number.pop_back();
    const double value = std::strtod(number.c_str(), nullptr);
    if (!(value >= 0.0 && value <= 1.0)) {
      throw MonitorError(MonitorError::Kind::out_of_range, "score " + number + " is outside [0, 1]");
    }
    PlausibilityScore s;
    s.value = value;
    s.raw_reply = reply;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const std::string l = text::strip_markdown(lines[k]);
      if (!text::starts_with_ci(l, "justification")) continue;
      const std::size_t colon = l.find(':');
      std::string just = colon == std::string::npos ? std::string() : text::trim(l.substr(colon + 1));
      for (std::size_t m = k + 1; m < lines.size(); ++m) {
        const std::string more = text::strip_markdown(lines[m]);
        if (more.empty() || text::starts_with_ci(more, "score")) break;
        just += (just.empty() ? "" : " ") + more;
      }
      s.justification = just;
      break;
    }
    return s;
  }
  throw MonitorError(MonitorError::Kind::unparseable, "reply has no 'Score:' line");
}

// ---------------------------------------------------------------------------

LocalMonitor::LocalMonitor(const BackendRegistry& backends, const TemplateLibrary& templates,
                           const EntitySet* entities, AttemptSink sink)
    : backends_(backends), templates_(templates), entities_(entities), sink_(std::move(sink)) {}

std::string LocalMonitor::caption(const PanelImage& image, const std::filesystem::path& run_dir) const {
  BackendRequest req;
  req.capability = Capability::caption;
  req.payload = {{"template", "caption"}, {"prompt", templates_.get("caption").render({})}};
  req.images.push_back({run_dir / image.artifact_path, image.media_type});
  return text::trim(backends_.call("captioner", req, sink_).text);
}

PlausibilityScore LocalMonitor::score_caption(const std::string& caption, const MemoryBuffer& buffer,
                                              int panel_index) const {
  const std::string prompt =
      templates_.get("local_monitor").render({{"memory", render_context(buffer)}, {"caption", caption}});
  BackendRequest req;
  req.capability = Capability::chat;
  req.payload = {{"template", "local_monitor"}, {"panel", panel_index}, {"prompt", prompt}};
  std::string reply = backends_.call("monitor", req, sink_).text;
  try {
    PlausibilityScore s = parse_score_reply(reply);
    s.caption = caption;
    return s;
  } catch (const MonitorError& first) {
    req.payload["prompt"] = prompt + "\n\nYour previous reply could not be read (" + first.what() +
                            "). Answer exactly in the form:\nScore: <float between 0 and 1>\nJustification: "
                            "<one or two sentences>";
    req.payload["reprompt"] = 1;
    reply = backends_.call("monitor", req, sink_).text;
    PlausibilityScore s = parse_score_reply(reply);
    s.caption = caption;
    s.attempts = 2;
    return s;
  }
}

PlausibilityScore LocalMonitor::score_panel(const PanelImage& image, const std::filesystem::path& run_dir,
                                            const MemoryBuffer& buffer) const {
  return score_caption(caption(image, run_dir), buffer, image.panel_index);
}

MemoryEntry LocalMonitor::make_entry(int panel_index, const std::string& caption, bool failed) const {
  MemoryEntry e;
  e.panel_index = panel_index;
  e.caption = caption;
  e.caption_failed = failed;
  if (!failed) e.predicates = extract_predicates(caption, entities_);
  e.summary = summarize_entry(caption, e.predicates);
  return e;
}

void LocalMonitor::update_buffer(MemoryBuffer& buffer, const PanelImage& image, const std::filesystem::path& run_dir,
                                 const std::string* known_caption) const {
  if (known_caption) {
    buffer.append(make_entry(image.panel_index, *known_caption, false));
    return;
  }
  try {
    buffer.append(make_entry(image.panel_index, caption(image, run_dir), false));
  } catch (const BackendError&) {
    buffer.append(make_entry(image.panel_index, std::string(kCaptionPlaceholder), true));
  }
}

}  // namespace logistory
