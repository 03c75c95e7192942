#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "logistory/domain.hpp"

namespace logistory {

// Deterministic local rules that turn state-describing sentences into
// StatePredicates. The same rules are applied to planner effects and to
// captions of generated panels, so both sides of a comparison agree on
// vocabulary.
//
// Recognized shapes (per clause):
//   X is/are in|inside|at|into Y        -> (X, location, Y)
//   X is/are under|on|near|behind... Y  -> (X, location, "<prep> Y")
//   X is/are together in Y              -> (X, location, Y)
//   X is/are Y                          -> (X, status, Y)
//   X has/have Y                        -> (X, has, Y)
//   X owns/own Y                        -> (X, owns, Y)
//   X appears/exists ...                -> (X, exists, yes)
// A subject "A and B" yields one predicate per conjunct; a plural subject
// such as "pigs" or "all three pigs" expands to the entities whose names are
// the singular stem followed by a number ("Pig1", "Pig 2").
// Clauses matching no rule are kept as (story, note, <clause>), never dropped.
std::vector<StatePredicate> extract_predicates(std::string_view text, const EntitySet* entities = nullptr);

// Splits a subject phrase on "and"/commas, drops quantifiers and articles,
// and maps each part to an entity name where possible (plurals expand to
// numbered members). Unresolved parts are returned as cleaned text.
std::vector<std::string> resolve_subjects(const std::string& subject, const EntitySet* entities);

// A world state keyed by (entity, attribute). Single-valued attributes are
// overwritten by newer values; notes and multi-valued attributes accumulate.
class StateSet {
 public:
  StateSet() = default;
  explicit StateSet(const std::vector<StatePredicate>& preds);

  void apply(const StatePredicate& p);
  void apply(const std::vector<StatePredicate>& preds);

  bool contains(const StatePredicate& p) const;
  // Sorted canonical strings; equal states yield equal vectors.
  std::vector<std::string> canonical() const;
  std::vector<StatePredicate> predicates() const;
  std::size_t size() const { return by_canonical_.size(); }
  bool empty() const { return by_canonical_.empty(); }

  bool operator==(const StateSet& other) const { return by_canonical_ == other.by_canonical_; }

 private:
  std::map<std::string, StatePredicate> by_canonical_;
};

// Human-readable rendering, e.g. "pot under chimney" or "wolf is defeated".
std::string describe_predicate(const StatePredicate& p);

}  // namespace logistory
