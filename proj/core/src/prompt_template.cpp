#include "logistory/prompt_template.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace logistory {

namespace detail {
const std::map<std::string, std::string>& builtin_template_table();
}

namespace {

bool ident_char(char c, bool first) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || (!first && std::isdigit(static_cast<unsigned char>(c)));
}

std::string rtrim(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, std::string text) : name_(std::move(name)), text_(std::move(text)) {
  std::string literal;
  auto fail = [&](std::size_t pos, const std::string& what) {
    throw TemplateError("template '" + name_ + "': " + what + " at offset " + std::to_string(pos));
  };
  for (std::size_t i = 0; i < text_.size(); ++i) {
    const char c = text_[i];
    if (c == '{') {
      if (i + 1 < text_.size() && text_[i + 1] == '{') {
        literal.push_back('{');
        ++i;
        continue;
      }
      std::size_t j = i + 1;
      while (j < text_.size() && ident_char(text_[j], j == i + 1)) ++j;
      if (j == i + 1 || j >= text_.size() || text_[j] != '}') fail(i, "malformed placeholder");
      if (!literal.empty()) pieces_.push_back({false, std::move(literal)});
      literal.clear();
      std::string id = text_.substr(i + 1, j - i - 1);
      if (std::find(placeholders_.begin(), placeholders_.end(), id) == placeholders_.end()) placeholders_.push_back(id);
      pieces_.push_back({true, std::move(id)});
      i = j;
    } else if (c == '}') {
      if (i + 1 < text_.size() && text_[i + 1] == '}') {
        literal.push_back('}');
        ++i;
        continue;
      }
      fail(i, "unmatched '}'");
    } else {
      literal.push_back(c);
    }
  }
  if (!literal.empty()) pieces_.push_back({false, std::move(literal)});
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::vector<std::string> missing;
  for (const auto& p : placeholders_) {
    if (!values.count(p)) missing.push_back(p);
  }
  if (!missing.empty()) {
    std::string msg = "template '" + name_ + "': unbound placeholder(s):";
    for (const auto& m : missing) msg += " {" + m + "}";
    throw TemplateError(msg);
  }
  std::string out;
  for (const auto& piece : pieces_) out += piece.placeholder ? values.at(piece.text) : piece.text;
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& required_placeholders(const std::string& template_name) {
  static const std::map<std::string, std::vector<std::string>> table = {
      {"scenecrafter", {"story"}},
      {"logicminer", {"entities", "story"}},
      {"shotplanner", {"entities", "story", "events"}},
      {"local_monitor", {"memory", "caption"}},
      {"refinement", {"graph", "state", "caption", "expected", "missing", "contradicting"}},
      {"instance_consistency", {"story"}},
      {"character_expressiveness", {"story"}},
      {"causal_vqa", {"action", "result"}},
      {"causal_rubric", {"action", "result"}},
      {"readability_inference", {"characters", "captions"}},
  };
  static const std::vector<std::string> none;
  auto it = table.find(template_name);
  return it == table.end() ? none : it->second;
}

TemplateLibrary::TemplateLibrary() {
  for (const auto& [name, text] : detail::builtin_template_table()) set(PromptTemplate(name, rtrim(text)));
}

TemplateLibrary::TemplateLibrary(const std::filesystem::path& dir) : TemplateLibrary() {
  if (!std::filesystem::is_directory(dir)) throw TemplateError("template directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    set(PromptTemplate(f.stem().string(), rtrim(buf.str())));
  }
}

void TemplateLibrary::set(PromptTemplate t) {
  for (const auto& required : required_placeholders(t.name())) {
    const auto& have = t.placeholders();
    if (std::find(have.begin(), have.end(), required) == have.end()) {
      throw TemplateError("template '" + t.name() + "' lacks required placeholder {" + required + "}");
    }
  }
  templates_[t.name()] = std::move(t);
}

const PromptTemplate& TemplateLibrary::get(const std::string& name) const {
  auto it = templates_.find(name);
  if (it == templates_.end()) throw TemplateError("unknown template '" + name + "'");
  return it->second;
}

std::vector<std::string> TemplateLibrary::names() const {
  std::vector<std::string> out;
  for (const auto& [n, _] : templates_) out.push_back(n);
  return out;
}

}  // namespace logistory
