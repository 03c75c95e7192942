#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "logistory/text.hpp"

using namespace logistory::text;

TEST_CASE("trim and normalize") {
  CHECK(trim("  a b \n") == "a b");
  CHECK(trim("") == "");
  CHECK(normalize("  The   Wolf\tHouse ") == "the wolf house");
  CHECK(to_lower("AbC") == "abc");
}

TEST_CASE("case-insensitive comparisons") {
  CHECK(starts_with_ci("Score: 0.5", "score"));
  CHECK_FALSE(starts_with_ci("Sc", "score"));
  CHECK(iequals("Wolf", "wOLF"));
  CHECK_FALSE(iequals("Wolf", "Wolves"));
}

TEST_CASE("split and join are inverse for a single separator") {
  const std::string s = "a,,b,c";
  const auto parts = split(s, ',');
  CHECK(parts == std::vector<std::string>{"a", "", "b", "c"});
  CHECK(join(parts, ",") == s);
  CHECK(split_lines("x\r\ny\n").size() == 2);
}

TEST_CASE("strip_markdown removes emphasis and one bullet") {
  CHECK(strip_markdown("- **Pig1:** small") == "Pig1: small");
  CHECK(strip_markdown("1. (Pig1, buys, straw)") == "(Pig1, buys, straw)");
  CHECK(strip_markdown("### *Effects:* done") == "Effects: done");
  CHECK(strip_markdown("`code`") == "code");
}

TEST_CASE("unquote strips one matching pair") {
  CHECK(unquote("\"hello\"") == "hello");
  CHECK(unquote("\xE2\x80\x9Chello\xE2\x80\x9D") == "hello");
  CHECK(unquote("\"unbalanced") == "\"unbalanced");
}

TEST_CASE("content_words drops short tokens and stopwords") {
  CHECK(content_words("The wolf and the pig ran into a house") ==
        std::vector<std::string>{"wolf", "pig", "ran", "house"});
  CHECK(content_words("").empty());
}
