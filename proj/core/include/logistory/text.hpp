#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace logistory::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Lowercase, trim, and collapse internal whitespace runs to one space.
std::string normalize(std::string_view s);

bool starts_with_ci(std::string_view s, std::string_view prefix);
bool iequals(std::string_view a, std::string_view b);

std::vector<std::string> split(std::string_view s, char sep);
// A trailing newline ends the last line; it does not start an empty one.
std::vector<std::string> split_lines(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Removes emphasis markers (*, **, __, `), heading hashes and one leading
// list bullet ("-", "*", "+", "1.", "1)").
std::string strip_markdown(std::string_view s);

// Strips one pair of matching surrounding quotes ("..." or “...”).
std::string unquote(std::string_view s);

// Lowercase alphanumeric tokens of length >= 3 that are not stopwords.
std::vector<std::string> content_words(std::string_view s);

}  // namespace logistory::text
