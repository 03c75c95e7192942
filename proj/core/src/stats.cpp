#include "logistory/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace logistory {

void RatingTable::validate() const {
  if (scale.empty()) throw StatsError("rating scale is empty");
  for (std::size_t i = 1; i < scale.size(); ++i) {
    if (!(scale[i - 1] < scale[i])) throw StatsError("rating scale must be strictly increasing");
  }
  const std::size_t raters = cells.empty() ? 0 : cells.front().size();
  for (std::size_t u = 0; u < cells.size(); ++u) {
    if (cells[u].size() != raters) throw StatsError("row " + std::to_string(u) + " has a different rater count");
    for (const auto& c : cells[u]) {
      if (c && !std::binary_search(scale.begin(), scale.end(), *c)) {
        std::ostringstream os;
        os << "rating " << *c << " in row " << u << " is not on the scale";
        throw StatsError(os.str());
      }
    }
  }
}

double krippendorff_alpha_ordinal(const RatingTable& t) {
  t.validate();
  const std::size_t k = t.scale.size();
  auto category = [&](double v) {
    return static_cast<std::size_t>(std::lower_bound(t.scale.begin(), t.scale.end(), v) - t.scale.begin());
  };

  // Coincidence matrix over pairable items.
  std::vector<std::vector<double>> o(k, std::vector<double>(k, 0.0));
  for (const auto& row : t.cells) {
    std::vector<std::size_t> vals;
    for (const auto& c : row) {
      if (c) vals.push_back(category(*c));
    }
    if (vals.size() < 2) continue;
    const double w = 1.0 / static_cast<double>(vals.size() - 1);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      for (std::size_t j = 0; j < vals.size(); ++j) {
        if (i != j) o[vals[i]][vals[j]] += w;
      }
    }
  }
  std::vector<double> marg(k, 0.0);
  double n = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    marg[c] = std::accumulate(o[c].begin(), o[c].end(), 0.0);
    n += marg[c];
  }
  if (n < 2.0) throw StatsError("fewer than two pairable ratings");

  // Ordinal metric: squared cumulative marginal mass between the categories.
  auto delta2 = [&](std::size_t c, std::size_t e) {
    if (c == e) return 0.0;
    const std::size_t lo = std::min(c, e), hi = std::max(c, e);
    double s = 0.0;
    for (std::size_t g = lo; g <= hi; ++g) s += marg[g];
    s -= (marg[lo] + marg[hi]) / 2.0;
    return s * s;
  };

  double d_o = 0.0, d_e = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t e = 0; e < k; ++e) {
      const double d = delta2(c, e);
      d_o += o[c][e] * d;
      d_e += marg[c] * marg[e] * d;
    }
  }
  d_o /= n;
  d_e /= n * (n - 1.0);
  if (d_e == 0.0) {
    if (d_o == 0.0) return 1.0;
    throw StatsError("expected disagreement is zero but observed disagreement is not");
  }
  return 1.0 - d_o / d_e;
}

// ---------------------------------------------------------------------------

namespace {

void check_pair(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw StatsError("vectors differ in length");
  if (x.size() < 2) throw StatsError("need at least two observations");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw StatsError("non-finite observation");
  }
}

// Sorts v[lo, hi) and returns the number of inversions.
std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo, j = mid, out = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[out++] = v[j++];
    } else {
      buf[out++] = v[i++];
    }
  }
  while (i < mid) buf[out++] = v[i++];
  while (j < hi) buf[out++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

// Sum over tie groups of m(m-1)/2 in a sorted sequence.
template <typename Eq>
std::uint64_t tied_pairs(std::size_t n, Eq eq) {
  std::uint64_t total = 0, run = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i < n && eq(i - 1, i)) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

}  // namespace

double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  check_pair(x, y);
  const std::size_t n = x.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
  const std::uint64_t n1 = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[idx[a]] == x[idx[b]]; });
  const std::uint64_t n3 = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[idx[a]] == x[idx[b]] && y[idx[a]] == y[idx[b]];
  });
  std::vector<double> ys(n), buf(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
  const std::uint64_t discordant = merge_count(ys, buf, 0, n);
  const std::uint64_t n2 = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });
  if (n1 == n0 || n2 == n0) throw StatsError("tau-b is undefined when every value in one vector is tied");
  const double num = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                     static_cast<double>(n3) - 2.0 * static_cast<double>(discordant);
  const double den = std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
  return std::clamp(num / den, -1.0, 1.0);
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
  check_pair(x, y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw StatsError("pearson r is undefined for a zero-variance vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

MethodRanking build_ranking(const std::string& metric, const std::map<std::string, double>& scores) {
  MethodRanking r;
  r.metric = metric;
  for (const auto& [m, s] : scores) {
    if (!std::isfinite(s)) throw StatsError("score for " + m + " is not finite");
    r.entries.push_back({m, s, 0.0});
  }
  std::stable_sort(r.entries.begin(), r.entries.end(),
                   [](const RankedMethod& a, const RankedMethod& b) { return a.score > b.score; });
  for (std::size_t i = 0; i < r.entries.size();) {
    std::size_t j = i + 1;
    while (j < r.entries.size() && r.entries[j].score == r.entries[i].score) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    std::vector<std::string> group;
    for (std::size_t g = i; g < j; ++g) {
      r.entries[g].rank = avg;
      group.push_back(r.entries[g].method);
    }
    if (group.size() > 1) r.tie_groups.push_back(std::move(group));
    i = j;
  }
  return r;
}

void to_json(json& j, const MethodRanking& r) {
  json entries = json::array();
  for (const auto& e : r.entries) entries.push_back({{"method", e.method}, {"score", e.score}, {"rank", e.rank}});
  j = json{{"metric", r.metric}, {"entries", entries}, {"tie_groups", r.tie_groups}};
}

void to_json(json& j, const SaturationPoint& p) {
  j = json{{"metric", p.metric}, {"size", p.size}, {"tau", p.tau}};
}

std::vector<SaturationPoint> saturation_analysis(const SubsetScores& scores, std::optional<std::size_t> full_size) {
  if (scores.empty()) throw StatsError("no subset scores");
  const std::size_t full = full_size.value_or(scores.rbegin()->first);
  const auto full_it = scores.find(full);
  if (full_it == scores.end()) throw StatsError("full-size entry " + std::to_string(full) + " is missing");
  const auto& full_scores = full_it->second;
  if (full_scores.size() < 2) throw StatsError("need at least two methods");

  std::set<std::string> metrics;
  for (const auto& [_, by_metric] : full_scores) {
    for (const auto& [m, __] : by_metric) metrics.insert(m);
  }
  std::vector<SaturationPoint> out;
  for (const auto& metric : metrics) {
    std::vector<double> reference;
    for (const auto& [method, by_metric] : full_scores) {
      const auto it = by_metric.find(metric);
      if (it == by_metric.end()) throw StatsError("method " + method + " lacks " + metric + " in the full set");
      reference.push_back(it->second);
    }
    for (const auto& [size, by_method] : scores) {
      std::vector<double> sub;
      for (const auto& [method, _] : full_scores) {
        const auto m = by_method.find(method);
        if (m == by_method.end()) {
          throw StatsError("method " + method + " is missing from subset size " + std::to_string(size));
        }
        const auto v = m->second.find(metric);
        if (v == m->second.end()) {
          throw StatsError("method " + method + " lacks " + metric + " at subset size " + std::to_string(size));
        }
        sub.push_back(v->second);
      }
      if (by_method.size() != full_scores.size()) {
        throw StatsError("subset size " + std::to_string(size) + " ranks a different set of methods");
      }
      out.push_back({metric, size, kendall_tau_b(sub, reference)});
    }
  }
  return out;
}

std::string saturation_csv(const std::vector<SaturationPoint>& points) {
  std::ostringstream os;
  os.precision(10);
  os << "metric,size,tau\n";
  for (const auto& p : points) os << p.metric << "," << p.size << "," << p.tau << "\n";
  return os.str();
}

namespace {

std::vector<std::string> csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

ScoreTable parse_score_table(const std::string& csv, const std::string& origin) {
  std::istringstream in(csv);
  std::string line;
  ScoreTable t;
  int lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = csv_row(line);
    if (header) {
      if (cells.size() < 2) throw StatsError(origin + ":" + std::to_string(lineno) + ": header needs a score column");
      t.columns.assign(cells.begin() + 1, cells.end());
      header = false;
      continue;
    }
    if (cells.size() != t.columns.size() + 1) {
      throw StatsError(origin + ":" + std::to_string(lineno) + ": expected " + std::to_string(t.columns.size() + 1) +
                       " fields, got " + std::to_string(cells.size()));
    }
    const std::string& method = cells[0];
    if (method.empty()) throw StatsError(origin + ":" + std::to_string(lineno) + ": empty method name");
    if (t.values.count(method)) throw StatsError(origin + ":" + std::to_string(lineno) + ": duplicate method " + method);
    t.methods.push_back(method);
    auto& row = t.values[method];
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      const std::string& cell = cells[c + 1];
      if (cell.empty()) continue;
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || !std::isfinite(v)) {
        throw StatsError(origin + ":" + std::to_string(lineno) + ": '" + cell + "' is not a number");
      }
      row[t.columns[c]] = v;
    }
  }
  if (header) throw StatsError(origin + ": empty table");
  return t;
}

void to_json(json& j, const CorrelationResult& c) {
  j = json{{"auto", c.auto_column}, {"human", c.human_column}, {"methods", c.methods}, {"r", c.r}};
}

std::vector<CorrelationResult> correlate_tables(const ScoreTable& automatic, const ScoreTable& human,
                                                const std::vector<std::pair<std::string, std::string>>& pairs,
                                                const std::set<std::string>& excluded) {
  std::vector<CorrelationResult> out;
  for (const auto& [a, h] : pairs) {
    CorrelationResult c;
    c.auto_column = a;
    c.human_column = h;
    std::vector<double> x, y;
    for (const auto& m : automatic.methods) {
      if (excluded.count(m)) continue;
      const auto hm = human.values.find(m);
      if (hm == human.values.end()) continue;
      const auto& am = automatic.values.at(m);
      const auto av = am.find(a);
      const auto hv = hm->second.find(h);
      if (av == am.end() || hv == hm->second.end()) continue;
      c.methods.push_back(m);
      x.push_back(av->second);
      y.push_back(hv->second);
    }
    c.r = pearson_r(x, y);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace logistory
