#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "logistory/domain.hpp"

namespace logistory {

class DatasetError : public Error {
 public:
  DatasetError(std::string message, std::vector<Violation> violations = {})
      : Error(std::move(message)), violations_(std::move(violations)) {}

  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

// An ordered, validated collection of StoryRecords. Immutable once built.
class Dataset {
 public:
  Dataset() = default;
  // Throws DatasetError listing every violation (including duplicate ids).
  explicit Dataset(std::vector<StoryRecord> records);

  const std::vector<StoryRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const StoryRecord* find(std::int64_t id) const;
  const StoryRecord& at(std::int64_t id) const;  // throws DatasetError

  bool operator==(const Dataset& other) const { return records_ == other.records_; }

 private:
  std::vector<StoryRecord> records_;
  std::map<std::int64_t, std::size_t> index_;
};

// Accepts a JSON array of story objects, a single story object, or JSON
// lines (one object per line).
// Parse errors report line and column; validation errors list all
// violations and no partial dataset is returned.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& content, const std::string& origin = "<memory>");

// Writes JSON lines.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

Dataset filter_by_level(const Dataset& ds, Level level);

struct SaturationPlan {
  std::vector<std::size_t> subset_sizes;
  std::vector<std::vector<std::int64_t>> subsets;  // ids, ascending within each subset
};

inline const std::vector<std::size_t> kDefaultSaturationSizes = {12, 24, 36, 48, 60};

// Nested, difficulty-stratified subsets. Each level's ids are shuffled once
// with `seed`; a subset of size s takes a prefix of every level's order, so
// nesting holds by construction. Per-level quotas follow largest-remainder
// apportionment, adjusted so they never shrink as s grows.
SaturationPlan build_saturation_plan(const Dataset& ds, const std::vector<std::size_t>& sizes,
                                     std::uint64_t seed);

void to_json(json& j, const SaturationPlan& plan);
void from_json(const json& j, SaturationPlan& plan);

}  // namespace logistory
