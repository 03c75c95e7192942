#include "logistory/predicates.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "logistory/text.hpp"

namespace logistory {

namespace {

constexpr std::array<std::string_view, 5> kContainment = {"in", "inside", "into", "at", "within"};
constexpr std::array<std::string_view, 13> kRelative = {"under", "beneath", "below", "above",
                                                         "on",    "onto",    "near",  "behind",
                                                         "beside", "outside", "over", "atop",
                                                         "next"};
constexpr std::array<std::string_view, 14> kQuantifiers = {
    "all", "both", "the", "a", "an", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"};

template <std::size_t N>
bool one_of(const std::array<std::string_view, N>& set, std::string_view w) {
  return std::find(set.begin(), set.end(), w) != set.end();
}

std::vector<std::string> words_of(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::string strip_edge_punct(std::string_view s) {
  std::string t = text::trim(s);
  auto is_edge = [](char c) {
    return c == '"' || c == '\'' || c == '.' || c == ',' || c == ':' || c == '(' || c == ')' ||
           c == '*' || c == '`';
  };
  while (!t.empty() && is_edge(t.back())) t.pop_back();
  std::size_t b = 0;
  while (b < t.size() && is_edge(t[b])) ++b;
  t.erase(0, b);
  // Curly quotes are three bytes in UTF-8.
  for (std::string_view q : {"\xE2\x80\x9C", "\xE2\x80\x9D"}) {
    if (t.size() >= q.size() && t.compare(0, q.size(), q) == 0) t.erase(0, q.size());
    if (t.size() >= q.size() && t.compare(t.size() - q.size(), q.size(), q) == 0)
      t.erase(t.size() - q.size());
  }
  return text::trim(t);
}

std::string strip_article(const std::string& s) {
  for (std::string_view article : {"the ", "a ", "an "}) {
    if (s.size() > article.size() && text::starts_with_ci(s, article)) {
      return text::trim(std::string_view(s).substr(article.size()));
    }
  }
  return s;
}

std::string join_words(const std::vector<std::string>& w, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to && i < w.size(); ++i) {
    if (!out.empty()) out.push_back(' ');
    out += w[i];
  }
  return out;
}

// "pig1" and "pig 2" are numbered members of stem "pig".
bool is_numbered_member(const std::string& name, const std::string& stem) {
  if (name.size() <= stem.size() || name.compare(0, stem.size(), stem) != 0) return false;
  std::size_t i = stem.size();
  if (name[i] == ' ') ++i;
  if (i >= name.size()) return false;
  for (; i < name.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return false;
  }
  return true;
}

// Expands "pigs" into {"Pig1", "Pig2", "Pig3"} when the entity set names
// numbered members of that kind. Returns an empty list otherwise.
std::vector<std::string> expand_plural(const std::string& noun, const EntitySet* entities) {
  if (!entities) return {};
  const std::string n = text::to_lower(noun);
  if (n.size() < 3 || n.back() != 's' || entities->find(n)) return {};
  std::vector<std::string> stems{n.substr(0, n.size() - 1)};
  if (n.size() > 3 && n.compare(n.size() - 2, 2, "es") == 0) stems.push_back(n.substr(0, n.size() - 2));
  std::vector<std::string> out;
  for (const auto& stem : stems) {
    for (const auto* e : entities->all()) {
      if (e->kind != EntityKind::character && e->kind != EntityKind::object) continue;
      if (is_numbered_member(canonical_name(e->name), stem)) out.push_back(e->name);
    }
    if (!out.empty()) break;
  }
  return out;
}

}  // namespace

std::vector<std::string> resolve_subjects(const std::string& raw_subject, const EntitySet* entities) {
  std::vector<std::string> words = words_of(raw_subject);
  while (!words.empty() && one_of(kQuantifiers, text::to_lower(words.front()))) {
    words.erase(words.begin());
  }
  if (words.empty()) return {};
  std::string subject = join_words(words, 0, words.size());

  // Conjunctions: "Pig1 and Pig2", "pot, fire and water".
  std::vector<std::string> parts;
  {
    std::string normalized = subject;
    for (std::size_t pos; (pos = text::to_lower(normalized).find(" and ")) != std::string::npos;) {
      normalized.replace(pos, 5, ",");
    }
    for (auto& p : text::split(normalized, ',')) {
      std::string t = text::trim(p);
      if (!t.empty()) parts.push_back(t);
    }
  }

  std::vector<std::string> out;
  for (const auto& part : parts) {
    std::string cleaned = strip_article(part);
    if (entities) {
      if (const EntityDef* e = entities->find(cleaned)) {
        out.push_back(e->name);
        continue;
      }
      auto members = expand_plural(cleaned, entities);
      if (!members.empty()) {
        out.insert(out.end(), members.begin(), members.end());
        continue;
      }
    }
    out.push_back(cleaned);
  }
  return out;
}

namespace {

enum class VerbKind { none, copula, has, owns, exists };

struct Verb {
  VerbKind kind = VerbKind::none;
  std::size_t index = 0;
  std::size_t rest = 0;  // first word after the verb phrase
};

Verb find_verb(const std::vector<std::string>& words) {
  for (std::size_t i = 1; i < words.size(); ++i) {
    const std::string w = text::to_lower(words[i]);
    if (w == "is" || w == "are" || w == "was" || w == "were") return {VerbKind::copula, i, i + 1};
    if (w == "has" || w == "have") {
      if (i + 1 < words.size() && text::to_lower(words[i + 1]) == "been") {
        return {VerbKind::copula, i, i + 2};
      }
      return {VerbKind::has, i, i + 1};
    }
    if (w == "owns" || w == "own") return {VerbKind::owns, i, i + 1};
    if (w == "appears" || w == "appear" || w == "exists" || w == "exist") {
      return {VerbKind::exists, i, i + 1};
    }
  }
  return {};
}

// Parses one clause; returns false when no rule applies.
bool parse_clause(const std::string& clause, const EntitySet* entities, std::vector<StatePredicate>& out) {
  const std::vector<std::string> words = words_of(clause);
  const Verb verb = find_verb(words);
  if (verb.kind == VerbKind::none) return false;
  // Long subjects are almost always a different sentence shape.
  if (verb.index > 6) return false;

  const std::vector<std::string> subjects = resolve_subjects(join_words(words, 0, verb.index), entities);
  if (subjects.empty()) return false;

  std::string attribute;
  std::string value;
  std::size_t r = verb.rest;
  switch (verb.kind) {
    case VerbKind::exists:
      attribute = "exists";
      value = "yes";
      break;
    case VerbKind::has:
    case VerbKind::owns: {
      attribute = verb.kind == VerbKind::has ? "has" : "owns";
      value = strip_article(join_words(words, r, words.size()));
      break;
    }
    case VerbKind::copula: {
      if (r < words.size() && text::to_lower(words[r]) == "now") ++r;
      if (r < words.size() && text::to_lower(words[r]) == "together") {
        ++r;
        if (r >= words.size()) {
          attribute = "status";
          value = "together";
          break;
        }
      }
      const std::string head = r < words.size() ? text::to_lower(words[r]) : std::string();
      if (one_of(kContainment, head) && r + 1 < words.size()) {
        attribute = "location";
        value = strip_article(join_words(words, r + 1, words.size()));
      } else if (one_of(kRelative, head) && r + 1 < words.size()) {
        std::size_t obj = r + 1;
        std::string prep = head;
        if (head == "next" && obj < words.size() && text::to_lower(words[obj]) == "to") {
          prep = "next to";
          ++obj;
        }
        attribute = "location";
        value = prep + " " + strip_article(join_words(words, obj, words.size()));
      } else {
        attribute = "status";
        value = join_words(words, r, words.size());
      }
      break;
    }
    case VerbKind::none:
      return false;
  }
  value = text::trim(value);
  if (value.empty()) return false;
  for (const auto& s : subjects) out.push_back({s, attribute, value});
  return true;
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const bool decimal_point = c == '.' && i > 0 && i + 1 < s.size() &&
                               std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
                               std::isdigit(static_cast<unsigned char>(s[i + 1]));
    if ((c == '.' || c == ';' || c == '!' || c == '?' || c == '\n') && !decimal_point) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<StatePredicate> extract_predicates(std::string_view input, const EntitySet* entities) {
  std::vector<StatePredicate> out;
  for (const auto& sentence : split_sentences(input)) {
    std::vector<std::string> unmatched;
    for (const auto& raw_clause : text::split(sentence, ',')) {
      const std::string clause = strip_edge_punct(raw_clause);
      if (clause.empty()) continue;
      if (!parse_clause(clause, entities, out)) unmatched.push_back(clause);
    }
    if (!unmatched.empty()) {
      out.push_back({std::string(kNoteEntity), std::string(kNoteAttribute), text::join(unmatched, ", ")});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

StateSet::StateSet(const std::vector<StatePredicate>& preds) { apply(preds); }

void StateSet::apply(const StatePredicate& p) {
  const std::string canon = canonical_predicate(p);
  if (!is_note(p) && !is_multi_valued_attribute(p.attribute)) {
    const std::string key = canon.substr(0, canon.find('|', canon.find('|') + 1) + 1);
    auto it = by_canonical_.lower_bound(key);
    while (it != by_canonical_.end() && it->first.compare(0, key.size(), key) == 0) {
      it = by_canonical_.erase(it);
    }
  }
  by_canonical_[canon] = p;
}

void StateSet::apply(const std::vector<StatePredicate>& preds) {
  for (const auto& p : preds) apply(p);
}

bool StateSet::contains(const StatePredicate& p) const {
  return by_canonical_.count(canonical_predicate(p)) != 0;
}

std::vector<std::string> StateSet::canonical() const {
  std::vector<std::string> out;
  out.reserve(by_canonical_.size());
  for (const auto& [k, _] : by_canonical_) out.push_back(k);
  return out;
}

std::vector<StatePredicate> StateSet::predicates() const {
  std::vector<StatePredicate> out;
  out.reserve(by_canonical_.size());
  for (const auto& [_, p] : by_canonical_) out.push_back(p);
  return out;
}

std::string describe_predicate(const StatePredicate& p) {
  if (is_note(p)) return text::trim(p.value);
  const std::string attr = text::normalize(p.attribute);
  const std::string entity = text::trim(p.entity);
  const std::string value = text::trim(p.value);
  if (attr == "location") {
    const std::string head = text::to_lower(words_of(value).empty() ? "" : words_of(value).front());
    if (one_of(kRelative, head)) return entity + " " + value;
    return entity + " in " + value;
  }
  if (attr == "status") return entity + " is " + value;
  if (attr == "exists") return entity + " present";
  if (attr == "has" || attr == "owns") return entity + " " + attr + " " + value;
  return entity + " " + attr + " " + value;
}

}  // namespace logistory
