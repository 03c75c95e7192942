#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "logistory/domain.hpp"

namespace logistory {

// Items x raters; std::nullopt marks a missing rating.
struct RatingTable {
  std::vector<std::vector<std::optional<double>>> cells;
  std::vector<double> scale;  // ordered categories, lowest first

  // Throws StatsError on ragged rows, unknown values or an unordered scale.
  void validate() const;
};

// Ordinal alpha over the coincidence matrix. Items with fewer than two
// ratings are not pairable and are dropped. Returns 1.0 when observed and
// expected disagreement are both zero.
double krippendorff_alpha_ordinal(const RatingTable& t);

// Tau-b with tie correction, O(n log n). Throws StatsError on length
// mismatch, n < 2, or a vector whose values are all tied.
double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y);

// Sample correlation; throws StatsError on zero variance.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

struct RankedMethod {
  std::string method;
  double score = 0.0;
  double rank = 0.0;  // 1 = best; ties share the average rank
};

struct MethodRanking {
  std::string metric;
  std::vector<RankedMethod> entries;  // descending score, ties by method name
  std::vector<std::vector<std::string>> tie_groups;  // groups of size >= 2
};

MethodRanking build_ranking(const std::string& metric, const std::map<std::string, double>& scores);

void to_json(json& j, const MethodRanking& r);

// size -> method -> metric -> score
using SubsetScores = std::map<std::size_t, std::map<std::string, std::map<std::string, double>>>;

struct SaturationPoint {
  std::string metric;
  std::size_t size = 0;
  double tau = 0.0;
};

void to_json(json& j, const SaturationPoint& p);

// For every metric of the full-size entry and every subset size, tau-b of the
// subset scores against the full-set scores over the same methods.
// full_size defaults to the largest key.
std::vector<SaturationPoint> saturation_analysis(const SubsetScores& scores,
                                                 std::optional<std::size_t> full_size = std::nullopt);

std::string saturation_csv(const std::vector<SaturationPoint>& points);

// Methods x columns table of scores read from CSV: a header row whose first
// cell names the method column, then one row per method. Empty cells are
// missing values.
struct ScoreTable {
  std::vector<std::string> columns;  // excluding the method column
  std::vector<std::string> methods;  // row order
  std::map<std::string, std::map<std::string, double>> values;  // method -> column -> score
};

ScoreTable parse_score_table(const std::string& csv, const std::string& origin = "<memory>");

struct CorrelationResult {
  std::string auto_column;
  std::string human_column;
  std::vector<std::string> methods;  // rows entering the computation
  double r = 0.0;
};

void to_json(json& j, const CorrelationResult& c);

// Pearson r per (auto column, human column) pair over the methods present in
// both tables with both values, minus `excluded`.
std::vector<CorrelationResult> correlate_tables(const ScoreTable& automatic, const ScoreTable& human,
                                                const std::vector<std::pair<std::string, std::string>>& pairs,
                                                const std::set<std::string>& excluded = {});

}  // namespace logistory
