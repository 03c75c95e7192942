#include "logistory/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "logistory/hashing.hpp"
#include "logistory/text.hpp"

namespace logistory {

Dataset::Dataset(std::vector<StoryRecord> records) {
  std::vector<Violation> all;
  std::map<std::int64_t, std::size_t> index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string prefix = "story " + std::to_string(r.id) + ": ";
    for (auto v : validate_story_record(r)) {
      v.field = "[" + std::to_string(i) + "]." + v.field;
      v.message = prefix + v.message;
      all.push_back(std::move(v));
    }
    if (!index.emplace(r.id, i).second) {
      all.push_back({"[" + std::to_string(i) + "].id", "unique-id", "duplicate id " + std::to_string(r.id)});
    }
  }
  if (!all.empty()) {
    std::string msg = "dataset has " + std::to_string(all.size()) + " violation(s)";
    for (const auto& v : all) msg += "\n  " + v.field + ": " + v.message;
    throw DatasetError(msg, std::move(all));
  }
  records_ = std::move(records);
  index_ = std::move(index);
}

const StoryRecord* Dataset::find(std::int64_t id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

const StoryRecord& Dataset::at(std::int64_t id) const {
  if (const auto* r = find(id)) return *r;
  throw DatasetError("no story with id " + std::to_string(id));
}

namespace {

// nlohmann reports a byte offset; convert it to line:column.
std::string locate(const std::string& content, std::size_t byte, std::size_t line_offset = 0) {
  std::size_t line = 1 + line_offset, col = 1;
  for (std::size_t i = 0; i < byte && i < content.size(); ++i) {
    if (content[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return std::to_string(line) + ":" + std::to_string(col);
}

std::string first_line(const std::string& content, std::size_t from) {
  const std::size_t nl = content.find('\n', from);
  return content.substr(from, nl == std::string::npos ? std::string::npos : nl - from);
}

StoryRecord record_from(const json& j, const std::string& where) {
  if (!j.is_object()) throw DatasetError(where + ": expected a JSON object");
  try {
    return j.get<StoryRecord>();
  } catch (const DatasetError&) {
    throw;
  } catch (const std::exception& e) {
    throw DatasetError(where + ": " + e.what());
  }
}

}  // namespace

Dataset parse_dataset(const std::string& content, const std::string& origin) {
  std::vector<StoryRecord> records;
  const std::size_t first = content.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return Dataset{};

  if (content[first] == '[') {
    json doc;
    try {
      doc = json::parse(content);
    } catch (const json::parse_error& e) {
      throw DatasetError(origin + ":" + locate(content, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }
    for (std::size_t i = 0; i < doc.size(); ++i) {
      records.push_back(record_from(doc[i], origin + ": element " + std::to_string(i)));
    }
  } else if (const json whole = json::parse(content, nullptr, false); !whole.is_discarded() && whole.is_object() &&
                                                                      content.find('\n', first) != std::string::npos &&
                                                                      !json::accept(first_line(content, first))) {
    // A single pretty-printed story object.
    records.push_back(record_from(whole, origin));
  } else {
    std::istringstream in(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      json doc;
      try {
        doc = json::parse(line);
      } catch (const json::parse_error& e) {
        throw DatasetError(origin + ":" + std::to_string(lineno) + ":" +
                           std::to_string(e.byte == 0 ? 1 : e.byte) + ": " + e.what());
      }
      records.push_back(record_from(doc, origin + ":" + std::to_string(lineno)));
    }
  }
  return Dataset(std::move(records));
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open dataset " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_dataset(buf.str(), path.string());
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write dataset " + path.string());
  for (const auto& r : ds.records()) out << json(r).dump() << '\n';
  if (!out) throw DatasetError("write failed for " + path.string());
}

Dataset filter_by_level(const Dataset& ds, Level level) {
  std::vector<StoryRecord> kept;
  for (const auto& r : ds.records()) {
    if (r.level == level) kept.push_back(r);
  }
  return Dataset(std::move(kept));
}

// ---------------------------------------------------------------------------

namespace {

// Largest-remainder apportionment of `total` over `counts`; ties go to the
// earlier level.
std::vector<std::size_t> hamilton(std::size_t total, const std::vector<std::size_t>& counts, std::size_t n) {
  std::vector<std::size_t> q(counts.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    const double exact = static_cast<double>(total) * static_cast<double>(counts[l]) / static_cast<double>(n);
    q[l] = static_cast<std::size_t>(std::floor(exact));
    assigned += q[l];
    rem.push_back({exact - std::floor(exact), l});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total && k < rem.size(); ++k, ++assigned) ++q[rem[k].second];
  return q;
}

}  // namespace

SaturationPlan build_saturation_plan(const Dataset& ds, const std::vector<std::size_t>& sizes,
                                     std::uint64_t seed) {
  if (sizes.empty()) throw DatasetError("no subset sizes given");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw DatasetError("subset size must be positive");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw DatasetError("subset sizes not increasing");
  }
  if (sizes.back() > ds.size()) {
    throw DatasetError("subset size " + std::to_string(sizes.back()) + " exceeds dataset size " +
                       std::to_string(ds.size()));
  }

  constexpr Level kLevels[] = {Level::easy, Level::medium, Level::hard};
  std::vector<std::vector<std::int64_t>> order(3);
  for (const auto& r : ds.records()) order[static_cast<std::size_t>(r.level)].push_back(r.id);
  std::vector<std::size_t> counts(3);
  for (std::size_t l = 0; l < 3; ++l) {
    std::sort(order[l].begin(), order[l].end());
    stable_shuffle(order[l], seed ^ stable_seed(to_string(kLevels[l])));
    counts[l] = order[l].size();
  }

  SaturationPlan plan;
  plan.subset_sizes = sizes;
  std::vector<std::size_t> prev(3, 0);
  for (std::size_t s : sizes) {
    std::vector<std::size_t> q = hamilton(s, counts, ds.size());
    std::size_t sum = 0;
    for (std::size_t l = 0; l < 3; ++l) {
      q[l] = std::max(q[l], prev[l]);
      sum += q[l];
    }
    // Raising a quota to keep nesting may overshoot; take the excess back from
    // levels that grew the most relative to their exact share.
    while (sum > s) {
      std::size_t pick = 3;
      double worst = -1e300;
      for (std::size_t l = 0; l < 3; ++l) {
        if (q[l] <= prev[l]) continue;
        const double over = static_cast<double>(q[l]) -
                            static_cast<double>(s) * static_cast<double>(counts[l]) / static_cast<double>(ds.size());
        if (over > worst) {
          worst = over;
          pick = l;
        }
      }
      if (pick == 3) throw DatasetError("cannot build nested subsets");
      --q[pick];
      --sum;
    }
    std::vector<std::int64_t> ids;
    for (std::size_t l = 0; l < 3; ++l) {
      ids.insert(ids.end(), order[l].begin(), order[l].begin() + static_cast<std::ptrdiff_t>(q[l]));
    }
    std::sort(ids.begin(), ids.end());
    plan.subsets.push_back(std::move(ids));
    prev = q;
  }
  return plan;
}

void to_json(json& j, const SaturationPlan& plan) {
  j = json{{"subset_sizes", plan.subset_sizes}, {"subsets", plan.subsets}};
}

void from_json(const json& j, SaturationPlan& plan) {
  j.at("subset_sizes").get_to(plan.subset_sizes);
  j.at("subsets").get_to(plan.subsets);
  if (plan.subset_sizes.size() != plan.subsets.size()) {
    throw DatasetError("saturation plan: subset_sizes and subsets differ in length");
  }
}

}  // namespace logistory
