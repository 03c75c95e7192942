#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace logistory {

std::string sha256_hex(std::string_view data);
std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view encoded);  // throws Error on malformed input

// First eight bytes of SHA-256, for seeding from arbitrary text.
std::uint64_t stable_seed(std::string_view text);

// Fisher-Yates over mt19937_64. Unlike std::shuffle the result does not
// depend on the standard library implementation.
template <typename T>
void stable_shuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

}  // namespace logistory
