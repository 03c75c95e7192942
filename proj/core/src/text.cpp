#include "logistory/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace logistory::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

constexpr std::array<std::string_view, 40> kStopwords = {
    "the", "and", "for", "are", "but", "not", "you", "all", "any", "can",
    "has", "had", "her", "his", "its", "was", "one", "our", "out", "she",
    "him", "they", "them", "then", "than", "that", "this", "with", "from", "into",
    "onto", "have", "been", "were", "what", "when", "where", "which", "while", "there"};

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  return iequals(s.substr(0, prefix.size()), prefix);
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  auto lines = split(s, '\n');
  if (lines.size() > 1 && lines.back().empty()) lines.pop_back();
  for (auto& line : lines) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
  }
  return lines;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

std::string strip_markdown(std::string_view s) {
  std::string t = trim(s);
  // Leading markers: "#", then one bullet "-", "*", "+" or "1." / "1)".
  std::size_t p = 0;
  while (p < t.size() && t[p] == '#') ++p;
  while (p < t.size() && is_space(t[p])) ++p;
  if (p + 1 < t.size() && (t[p] == '-' || t[p] == '*' || t[p] == '+') && is_space(t[p + 1])) {
    ++p;
  } else {
    std::size_t d = p;
    while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
    if (d > p && d + 1 < t.size() && (t[d] == '.' || t[d] == ')') && is_space(t[d + 1])) p = d + 1;
  }
  std::string out;
  out.reserve(t.size() - p);
  for (std::size_t i = p; i < t.size(); ++i) {
    if (t[i] == '*' || t[i] == '`') continue;
    if (t[i] == '_' && i + 1 < t.size() && t[i + 1] == '_') {
      ++i;
      continue;
    }
    out.push_back(t[i]);
  }
  return trim(out);
}

std::string unquote(std::string_view s) {
  std::string t = trim(s);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return t.substr(1, t.size() - 2);
  constexpr std::string_view open = "\xE2\x80\x9C";   // left double quotation mark
  constexpr std::string_view close = "\xE2\x80\x9D";  // right double quotation mark
  if (t.size() >= open.size() + close.size() && t.compare(0, open.size(), open) == 0 &&
      t.compare(t.size() - close.size(), close.size(), close) == 0) {
    return t.substr(open.size(), t.size() - open.size() - close.size());
  }
  return t;
}

std::vector<std::string> content_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 3 &&
        std::find(kStopwords.begin(), kStopwords.end(), cur) == kStopwords.end()) {
      out.push_back(cur);
    }
    cur.clear();
  };
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace logistory::text
