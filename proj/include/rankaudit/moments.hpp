/*
 * Copyright 2026 The rankaudit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Adjacent-rank outcome moments.
//
// Under an unbiased ranker, for ranks a < b and any group configuration g,
//
//     E[ Y_a - (1 + gamma) Y_b | configuration g ] >= 0,
//
// where gamma is a known multiplicative position effect (0 when outcomes do
// not depend on display position). Each MomentSpec names one such
// inequality; estimate_moment computes its sample analogue.

#ifndef RANKAUDIT_MOMENTS_HPP_
#define RANKAUDIT_MOMENTS_HPP_

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rankaudit/model.hpp"

namespace rankaudit {

struct Adjustment {
  double gamma = 0.0;
  bool normalized = false;  // NDCG normalization by the query's IDCG.

  friend bool operator==(const Adjustment&, const Adjustment&) = default;
};

// Condition on the groups at the two compared ranks only.
struct PairCondition {
  std::string high_group;
  std::string low_group;

  friend bool operator==(const PairCondition&, const PairCondition&) = default;
};

// Condition on the complete group vector of the query.
struct PatternCondition {
  std::vector<std::string> groups;

  friend bool operator==(const PatternCondition&, const PatternCondition&) = default;
};

using Conditioning = std::variant<PairCondition, PatternCondition>;

// Observed-feature value of the candidate at the high rank and at the low
// rank. A missing feature compares equal to the empty string.
struct FeatureCondition {
  std::string key;
  std::string high_value;
  std::string low_value;

  friend bool operator==(const FeatureCondition&, const FeatureCondition&) = default;
  friend auto operator<=>(const FeatureCondition&, const FeatureCondition&) = default;
};

struct MomentSpec {
  std::size_t high_rank = 1;
  std::size_t low_rank = 2;
  Conditioning conditioning;
  std::vector<FeatureCondition> stratum;  // sorted by key; empty = unstratified
  Adjustment adjustment;

  friend bool operator==(const MomentSpec&, const MomentSpec&) = default;
};

enum class ConditioningMode { Pair, FullPattern };

// How a dataset query relates to one moment.
enum class QueryRole : std::uint8_t {
  Excluded,   // too short, outside the stratum, or skipped (zero IDCG)
  Unmatched,  // usable, but the group condition fails; contributes 0
  Matched,
};

struct MomentEstimate {
  MomentSpec spec;
  std::size_t n_matched = 0;
  std::size_t n_total = 0;
  double mean_unconditional = std::numeric_limits<double>::quiet_NaN();
  double mean_conditional = std::numeric_limits<double>::quiet_NaN();
  double se_unconditional = std::numeric_limits<double>::quiet_NaN();
  double se_conditional = std::numeric_limits<double>::quiet_NaN();
  // One entry per dataset query, in dataset order. Excluded queries hold 0.
  std::vector<double> contributions;
  std::vector<QueryRole> roles;

  bool matched_nothing() const { return n_matched == 0; }
};

// The high/low group pair a spec compares, whatever its conditioning mode.
inline std::pair<std::string, std::string> compared_groups(const MomentSpec& spec) {
  if (const auto* pair = std::get_if<PairCondition>(&spec.conditioning)) {
    return {pair->high_group, pair->low_group};
  }
  const auto& g = std::get<PatternCondition>(spec.conditioning).groups;
  return {g.at(spec.high_rank - 1), g.at(spec.low_rank - 1)};
}

inline std::string describe(const MomentSpec& spec) {
  std::ostringstream out;
  out << "r" << spec.high_rank << "-r" << spec.low_rank << " ";
  if (const auto* pair = std::get_if<PairCondition>(&spec.conditioning)) {
    out << pair->high_group << ">" << pair->low_group;
  } else {
    out << "[";
    const auto& g = std::get<PatternCondition>(spec.conditioning).groups;
    for (std::size_t i = 0; i < g.size(); ++i) out << (i ? "," : "") << g[i];
    out << "]";
  }
  for (const FeatureCondition& f : spec.stratum) {
    out << " " << f.key << "=" << f.high_value << "/" << f.low_value;
  }
  return out.str();
}

namespace detail {

inline const std::string& feature_or_empty(const Entry& e, const std::string& key) {
  static const std::string kEmpty;
  auto it = e.features.find(key);
  return it == e.features.end() ? kEmpty : it->second;
}

// Per-query outcome vectors after optional NDCG normalization; nullopt for
// queries dropped because their IDCG is zero.
inline std::vector<std::optional<std::vector<double>>> prepare_outcomes(const Dataset& data,
                                                                        bool normalized) {
  std::vector<std::optional<std::vector<double>>> out;
  out.reserve(data.size());
  const WeightScheme ndcg = WeightScheme::ndcg();
  for (const QueryRecord& q : data.queries()) {
    if (!normalized) {
      out.emplace_back(q.outcomes());
    } else if (auto n = ndcg_normalize(q, ndcg)) {
      out.emplace_back(n->outcomes());
    } else {
      out.emplace_back(std::nullopt);
    }
  }
  return out;
}

inline void validate(const MomentSpec& spec) {
  if (spec.high_rank < 1 || spec.high_rank >= spec.low_rank) {
    throw std::invalid_argument("moment spec needs 1 <= high_rank < low_rank");
  }
  if (!(spec.adjustment.gamma > -1.0)) {
    throw std::domain_error("moment spec: gamma must be > -1");
  }
  if (const auto* p = std::get_if<PatternCondition>(&spec.conditioning)) {
    if (spec.low_rank > p->groups.size()) {
      throw std::invalid_argument("moment spec: ranks exceed the pattern length");
    }
  }
}

inline void finish(MomentEstimate& est) {
  double sum_all = 0.0;
  double sum_matched = 0.0;
  for (std::size_t q = 0; q < est.roles.size(); ++q) {
    if (est.roles[q] == QueryRole::Excluded) continue;
    sum_all += est.contributions[q];
    if (est.roles[q] == QueryRole::Matched) sum_matched += est.contributions[q];
  }
  if (est.n_total > 0) est.mean_unconditional = sum_all / static_cast<double>(est.n_total);
  if (est.n_matched > 0) est.mean_conditional = sum_matched / static_cast<double>(est.n_matched);

  double ss_all = 0.0;
  double ss_matched = 0.0;
  for (std::size_t q = 0; q < est.roles.size(); ++q) {
    if (est.roles[q] == QueryRole::Excluded) continue;
    const double du = est.contributions[q] - est.mean_unconditional;
    ss_all += du * du;
    if (est.roles[q] == QueryRole::Matched) {
      const double dc = est.contributions[q] - est.mean_conditional;
      ss_matched += dc * dc;
    }
  }
  if (est.n_total >= 2) {
    const double n = static_cast<double>(est.n_total);
    est.se_unconditional = std::sqrt(ss_all / (n - 1.0)) / std::sqrt(n);
  }
  if (est.n_matched >= 2) {
    const double n = static_cast<double>(est.n_matched);
    est.se_conditional = std::sqrt(ss_matched / (n - 1.0)) / std::sqrt(n);
  }
}

inline MomentEstimate estimate_prepared(const Dataset& data,
                                        std::span<const std::optional<std::vector<double>>> outcomes,
                                        const MomentSpec& spec) {
  validate(spec);
  MomentEstimate est;
  est.spec = spec;
  est.contributions.assign(data.size(), 0.0);
  est.roles.assign(data.size(), QueryRole::Excluded);

  const std::size_t a = spec.high_rank - 1;
  const std::size_t b = spec.low_rank - 1;
  const double factor = 1.0 + spec.adjustment.gamma;

  // Resolve labels to codes once; a label outside the alphabet never matches.
  std::optional<std::uint32_t> high_code;
  std::optional<std::uint32_t> low_code;
  std::vector<std::optional<std::uint32_t>> pattern_codes;
  const auto* pair = std::get_if<PairCondition>(&spec.conditioning);
  const auto* pattern = std::get_if<PatternCondition>(&spec.conditioning);
  if (pair) {
    high_code = data.group_code(pair->high_group);
    low_code = data.group_code(pair->low_group);
  } else {
    for (const std::string& g : pattern->groups) pattern_codes.push_back(data.group_code(g));
  }

  for (std::size_t q = 0; q < data.size(); ++q) {
    const QueryRecord& query = data.queries()[q];
    if (query.size() <= b || !outcomes[q]) continue;
    bool in_stratum = true;
    for (const FeatureCondition& f : spec.stratum) {
      if (detail::feature_or_empty(query.entries()[a], f.key) != f.high_value ||
          detail::feature_or_empty(query.entries()[b], f.key) != f.low_value) {
        in_stratum = false;
        break;
      }
    }
    if (!in_stratum) continue;

    ++est.n_total;
    const auto& codes = data.codes(q);
    bool matched = false;
    if (pair) {
      matched = high_code && low_code && codes[a] == *high_code && codes[b] == *low_code;
    } else if (codes.size() == pattern_codes.size()) {
      matched = true;
      for (std::size_t r = 0; r < codes.size() && matched; ++r) {
        matched = pattern_codes[r] && codes[r] == *pattern_codes[r];
      }
    }
    if (matched) {
      const auto& y = *outcomes[q];
      est.contributions[q] = y[a] - factor * y[b];
      est.roles[q] = QueryRole::Matched;
      ++est.n_matched;
    } else {
      est.roles[q] = QueryRole::Unmatched;
    }
  }
  finish(est);
  return est;
}

}  // namespace detail

// Recomputes means and standard errors from (contributions, roles). Lets
// callers build estimates from externally supplied per-query values.
inline MomentEstimate estimate_from_contributions(MomentSpec spec, std::vector<double> contributions,
                                                  std::vector<QueryRole> roles) {
  if (contributions.size() != roles.size()) {
    throw std::invalid_argument("contributions and roles differ in length");
  }
  MomentEstimate est;
  est.spec = std::move(spec);
  est.contributions = std::move(contributions);
  est.roles = std::move(roles);
  for (std::size_t q = 0; q < est.roles.size(); ++q) {
    if (est.roles[q] == QueryRole::Excluded) {
      est.contributions[q] = 0.0;
      continue;
    }
    ++est.n_total;
    if (est.roles[q] == QueryRole::Matched) {
      ++est.n_matched;
    } else if (est.contributions[q] != 0.0) {
      throw std::invalid_argument("unmatched queries must contribute zero");
    }
  }
  detail::finish(est);
  return est;
}

inline MomentEstimate estimate_moment(const Dataset& data, const MomentSpec& spec) {
  const auto outcomes = detail::prepare_outcomes(data, spec.adjustment.normalized);
  return detail::estimate_prepared(data, outcomes, spec);
}

// Estimates a whole family, normalizing each query at most once.
inline std::vector<MomentEstimate> estimate_family(const Dataset& data,
                                                   std::span<const MomentSpec> specs) {
  std::optional<std::vector<std::optional<std::vector<double>>>> raw;
  std::optional<std::vector<std::optional<std::vector<double>>>> normalized;
  std::vector<MomentEstimate> out;
  out.reserve(specs.size());
  for (const MomentSpec& spec : specs) {
    auto& cache = spec.adjustment.normalized ? normalized : raw;
    if (!cache) cache = detail::prepare_outcomes(data, spec.adjustment.normalized);
    out.push_back(detail::estimate_prepared(data, *cache, spec));
  }
  return out;
}

// Count of queries dropped by NDCG normalization.
inline std::size_t count_zero_idcg(const Dataset& data) {
  std::size_t n = 0;
  const WeightScheme ndcg = WeightScheme::ndcg();
  for (const QueryRecord& q : data.queries()) {
    if (idcg(q.outcomes(), ndcg) == 0.0) ++n;
  }
  return n;
}

// One spec per adjacent pair (a, a+1), crossed with every ordered group pair
// of the alphabet (Pair) or every observed group vector (FullPattern), and
// with every observed combination of the requested feature values.
inline std::vector<MomentSpec> build_adjacent_family(const Dataset& data, ConditioningMode mode,
                                                     Adjustment adjustment,
                                                     std::span<const std::string> strata_keys = {}) {
  std::vector<MomentSpec> family;
  if (data.max_len() < 2) return family;

  std::set<std::string> keys(strata_keys.begin(), strata_keys.end());

  auto observed_strata = [&](std::size_t a) {
    std::set<std::vector<FeatureCondition>> seen;
    if (keys.empty()) {
      seen.insert(std::vector<FeatureCondition>{});
      return seen;
    }
    for (const QueryRecord& q : data.queries()) {
      if (q.size() <= a + 1) continue;
      std::vector<FeatureCondition> s;
      for (const std::string& k : keys) {
        s.push_back({k, detail::feature_or_empty(q.entries()[a], k),
                     detail::feature_or_empty(q.entries()[a + 1], k)});
      }
      seen.insert(std::move(s));
    }
    return seen;
  };

  if (mode == ConditioningMode::Pair) {
    for (std::size_t a = 0; a + 1 < data.max_len(); ++a) {
      const auto strata = observed_strata(a);
      for (const std::string& g1 : data.alphabet()) {
        for (const std::string& g2 : data.alphabet()) {
          for (const auto& s : strata) {
            family.push_back({a + 1, a + 2, PairCondition{g1, g2}, s, adjustment});
          }
        }
      }
    }
    return family;
  }

  std::set<std::vector<std::string>> patterns;
  for (const QueryRecord& q : data.queries()) {
    std::vector<std::string> g;
    for (const Entry& e : q.entries()) g.push_back(e.group);
    patterns.insert(std::move(g));
  }
  for (std::size_t a = 0; a + 1 < data.max_len(); ++a) {
    const auto strata = observed_strata(a);
    for (const auto& g : patterns) {
      if (g.size() <= a + 1) continue;
      for (const auto& s : strata) {
        family.push_back({a + 1, a + 2, PatternCondition{g}, s, adjustment});
      }
    }
  }
  return family;
}

// Conditional means m(a,b|g), m(b,c|g), m(a,c|g) under full-pattern
// conditioning. The third equals the sum of the first two.
inline std::array<double, 3> telescope_check(const Dataset& data, const std::vector<std::string>& g,
                                             std::size_t a, std::size_t b, std::size_t c) {
  if (!(a < b && b < c)) throw std::invalid_argument("telescope_check needs a < b < c");
  const auto outcomes = detail::prepare_outcomes(data, false);
  auto mean = [&](std::size_t hi, std::size_t lo) {
    return detail::estimate_prepared(data, outcomes, {hi, lo, PatternCondition{g}, {}, {}})
        .mean_conditional;
  };
  return {mean(a, b), mean(b, c), mean(a, c)};
}

}  // namespace rankaudit

#endif  // RANKAUDIT_MOMENTS_HPP_
