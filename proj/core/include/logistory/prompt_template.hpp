#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "logistory/error.hpp"

namespace logistory {

class TemplateError : public Error {
 public:
  using Error::Error;
};

// Text with `{name}` placeholders; `{{` and `}}` are literal braces.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  // Throws TemplateError on unbalanced braces or a malformed placeholder.
  PromptTemplate(std::string name, std::string text);

  const std::string& name() const { return name_; }
  const std::string& text() const { return text_; }
  // Unique placeholder names in order of first appearance.
  const std::vector<std::string>& placeholders() const { return placeholders_; }

  // Throws TemplateError naming every unbound placeholder. Extra values are
  // ignored. Substituted values are not re-scanned.
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  struct Piece {
    bool placeholder = false;
    std::string text;
  };
  std::string name_;
  std::string text_;
  std::vector<Piece> pieces_;
  std::vector<std::string> placeholders_;
};

// Templates compiled into the library, overridable from a directory of
// <name>.txt files. Known templates are checked for the placeholders the
// engine binds.
class TemplateLibrary {
 public:
  // Built-in templates only.
  TemplateLibrary();
  // Built-ins, then every *.txt in `dir` replacing the same name.
  explicit TemplateLibrary(const std::filesystem::path& dir);

  const PromptTemplate& get(const std::string& name) const;  // throws TemplateError
  bool has(const std::string& name) const { return templates_.count(name) != 0; }
  std::vector<std::string> names() const;

  void set(PromptTemplate t);  // validates required placeholders

 private:
  std::map<std::string, PromptTemplate> templates_;
};

// Placeholders the engine supplies for a known template name; empty for
// unknown names.
const std::vector<std::string>& required_placeholders(const std::string& template_name);

}  // namespace logistory
