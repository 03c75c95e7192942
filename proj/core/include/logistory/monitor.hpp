#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "logistory/backends.hpp"
#include "logistory/domain.hpp"
#include "logistory/prompt_template.hpp"

namespace logistory {

class MonitorError : public Error {
 public:
  enum class Kind { unparseable, out_of_range, budget };
  MonitorError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

inline constexpr std::string_view kEmptyMemory = "No prior panels.";
inline constexpr std::string_view kCaptionPlaceholder = "[caption unavailable]";
inline constexpr std::size_t kDefaultMemoryChars = 4000;

struct MemoryEntry {
  int panel_index = 0;
  std::string caption;
  std::vector<StatePredicate> predicates;
  std::string summary;
  bool summarized = false;
  bool caption_failed = false;
};

void to_json(json& j, const MemoryEntry& e);
void from_json(const json& j, MemoryEntry& e);

// Ordered record of accepted panels. When the rendered text would exceed
// max_chars, the oldest full entries are replaced by their summaries, then
// the oldest summaries are shortened; entries are never dropped.
class MemoryBuffer {
 public:
  explicit MemoryBuffer(std::size_t max_chars = kDefaultMemoryChars);

  // Throws MonitorError(budget) if panel_index does not increase or the
  // budget cannot hold even minimal summaries.
  void append(MemoryEntry entry);

  const std::vector<MemoryEntry>& entries() const { return entries_; }
  std::size_t max_chars() const { return max_chars_; }

  std::string render() const;

 private:
  std::vector<MemoryEntry> entries_;
  std::size_t max_chars_;
};

std::string render_context(const MemoryBuffer& buffer);

// First sentence of the caption followed by its predicates.
std::string summarize_entry(const std::string& caption, const std::vector<StatePredicate>& predicates);

struct PlausibilityScore {
  double value = 0.0;
  std::string justification;
  std::string raw_reply;
  std::string caption;  // caption the score was computed from
  int attempts = 1;
};

// First line of the form "Score: <decimal>" (case, spacing and markdown
// emphasis ignored). Throws MonitorError(unparseable | out_of_range).
PlausibilityScore parse_score_reply(const std::string& reply);

class LocalMonitor {
 public:
  LocalMonitor(const BackendRegistry& backends, const TemplateLibrary& templates, const EntitySet* entities = nullptr,
               AttemptSink sink = {});

  // Caption of the image via the "captioner" role. Throws BackendError.
  std::string caption(const PanelImage& image, const std::filesystem::path& run_dir) const;

  // ψ from a caption and the buffer via the "monitor" role; one re-prompt
  // with a format reminder on a bad reply, then MonitorError.
  PlausibilityScore score_caption(const std::string& caption, const MemoryBuffer& buffer, int panel_index) const;

  // Captions then scores.
  PlausibilityScore score_panel(const PanelImage& image, const std::filesystem::path& run_dir,
                                const MemoryBuffer& buffer) const;

  // Appends the panel using `known_caption` when given, else captions the
  // image; a caption failure records a placeholder and sets caption_failed.
  void update_buffer(MemoryBuffer& buffer, const PanelImage& image, const std::filesystem::path& run_dir,
                     const std::string* known_caption = nullptr) const;

  MemoryEntry make_entry(int panel_index, const std::string& caption, bool failed) const;

 private:
  const BackendRegistry& backends_;
  const TemplateLibrary& templates_;
  const EntitySet* entities_;
  AttemptSink sink_;
};

}  // namespace logistory
