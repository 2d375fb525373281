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

// Ranked-list data and the ranking objective.
//
// Ranks are 1-based throughout the public API (rank 1 is the best slot);
// a QueryRecord stores its entries in rank order, so entry i holds rank i+1.

#ifndef RANKAUDIT_MODEL_HPP_
#define RANKAUDIT_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rankaudit {

using FeatureMap = std::map<std::string, std::string>;

struct Entry {
  std::string group;
  double outcome = 0.0;
  FeatureMap features;

  friend bool operator==(const Entry&, const Entry&) = default;
};

class QueryRecord {
 public:
  QueryRecord(std::string query_id, std::vector<Entry> entries)
      : query_id_(std::move(query_id)), entries_(std::move(entries)) {
    if (entries_.empty()) {
      throw std::invalid_argument("query '" + query_id_ + "' has no candidates");
    }
    for (const Entry& e : entries_) {
      if (!std::isfinite(e.outcome)) {
        throw std::invalid_argument("query '" + query_id_ + "' has a non-finite outcome");
      }
    }
  }

  const std::string& id() const { return query_id_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  // 1-based rank access.
  const Entry& at_rank(std::size_t rank) const { return entries_.at(rank - 1); }

  std::vector<double> outcomes() const {
    std::vector<double> out;
    out.reserve(entries_.size());
    for (const Entry& e : entries_) out.push_back(e.outcome);
    return out;
  }

  // Returns a copy with outcome at rank r replaced by f(r, outcome).
  template <typename F>
  QueryRecord map_outcomes(F&& f) const {
    QueryRecord copy = *this;
    for (std::size_t i = 0; i < copy.entries_.size(); ++i) {
      copy.entries_[i].outcome = f(i + 1, copy.entries_[i].outcome);
    }
    for (const Entry& e : copy.entries_) {
      if (!std::isfinite(e.outcome)) {
        throw std::domain_error("query '" + query_id_ + "': outcome transform produced a non-finite value");
      }
    }
    return copy;
  }

  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;

 private:
  std::string query_id_;
  std::vector<Entry> entries_;
};

// w_r = 1 / log2(r + 1).
inline double ndcg_weight(std::size_t rank) {
  if (rank < 1) throw std::domain_error("ndcg_weight: rank must be >= 1");
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

// A strictly decreasing sequence of positive rank weights.
class WeightScheme {
 public:
  enum class Kind { Ndcg, Geometric, Explicit };

  static WeightScheme ndcg() { return WeightScheme(Kind::Ndcg, 0.0, {}); }

  // w_r = (1 + gamma)^(-r). Strict decrease needs gamma > 0.
  static WeightScheme geometric(double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) {
      throw std::domain_error("geometric weights need gamma > 0 to be strictly decreasing");
    }
    return WeightScheme(Kind::Geometric, gamma, {});
  }

  static WeightScheme explicit_weights(std::vector<double> weights) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
        throw std::domain_error("explicit weights must be positive and finite");
      }
      if (i > 0 && !(weights[i] < weights[i - 1])) {
        throw std::domain_error("explicit weights must be strictly decreasing");
      }
    }
    return WeightScheme(Kind::Explicit, 0.0, std::move(weights));
  }

  Kind kind() const { return kind_; }
  double gamma() const { return gamma_; }

  // Longest list the scheme can weight; unbounded schemes report SIZE_MAX.
  std::size_t capacity() const {
    return kind_ == Kind::Explicit ? explicit_.size() : SIZE_MAX;
  }

  double weight(std::size_t rank) const {
    if (rank < 1) throw std::domain_error("weight: rank must be >= 1");
    switch (kind_) {
      case Kind::Ndcg:
        return ndcg_weight(rank);
      case Kind::Geometric:
        return std::pow(1.0 + gamma_, -static_cast<double>(rank));
      case Kind::Explicit:
        if (rank > explicit_.size()) {
          throw std::out_of_range("weight: rank exceeds explicit weight list");
        }
        return explicit_[rank - 1];
    }
    return 0.0;
  }

  std::vector<double> resolve(std::size_t n) const {
    std::vector<double> w(n);
    for (std::size_t r = 1; r <= n; ++r) w[r - 1] = weight(r);
    return w;
  }

 private:
  WeightScheme(Kind kind, double gamma, std::vector<double> explicit_weights)
      : kind_(kind), gamma_(gamma), explicit_(std::move(explicit_weights)) {}

  Kind kind_;
  double gamma_;
  std::vector<double> explicit_;
};

inline double dcg(std::span<const double> outcomes_by_rank, const WeightScheme& weights) {
  if (outcomes_by_rank.size() > weights.capacity()) {
    throw std::out_of_range("dcg: list longer than the weight scheme");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < outcomes_by_rank.size(); ++i) {
    total += weights.weight(i + 1) * outcomes_by_rank[i];
  }
  return total;
}

inline double idcg(std::span<const double> outcomes, const WeightScheme& weights) {
  std::vector<double> sorted(outcomes.begin(), outcomes.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  return dcg(sorted, weights);
}

inline double objective_value(const QueryRecord& query, const WeightScheme& weights) {
  return dcg(query.outcomes(), weights);
}

// Divides every outcome by the query's IDCG. Returns nullopt when the IDCG
// is zero (all outcomes zero); such queries are skipped by callers.
inline std::optional<QueryRecord> ndcg_normalize(const QueryRecord& query,
                                                 const WeightScheme& weights) {
  const std::vector<double> y = query.outcomes();
  for (double v : y) {
    if (v < 0.0) {
      throw std::domain_error("ndcg_normalize: query '" + query.id() +
                              "' has a negative outcome");
    }
  }
  const double ideal = idcg(y, weights);
  if (ideal == 0.0) return std::nullopt;
  return query.map_outcomes([ideal](std::size_t, double v) { return v / ideal; });
}

// Position-adjusted outcome: the value at rank r becomes (1 + gamma)^r * y.
inline QueryRecord position_adjust(const QueryRecord& query, double gamma) {
  if (!(gamma > -1.0) || !std::isfinite(gamma)) {
    throw std::domain_error("position_adjust: gamma must be > -1");
  }
  if (gamma == 0.0) return query;
  return query.map_outcomes([gamma](std::size_t rank, double v) {
    return std::pow(1.0 + gamma, static_cast<double>(rank)) * v;
  });
}

// Candidate indices (0-based) in rank order: descending expected outcome,
// ties broken by lower original index.
inline std::vector<std::size_t> optimal_ranking(std::span<const double> expected_outcomes) {
  std::vector<std::size_t> order(expected_outcomes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return expected_outcomes[a] > expected_outcomes[b];
  });
  return order;
}

// An immutable collection of queries with an interned group alphabet.
class Dataset {
 public:
  Dataset() = default;

  explicit Dataset(std::vector<QueryRecord> queries) : queries_(std::move(queries)) {
    for (const QueryRecord& q : queries_) {
      max_len_ = std::max(max_len_, q.size());
      for (const Entry& e : q.entries()) alphabet_.push_back(e.group);
    }
    std::sort(alphabet_.begin(), alphabet_.end());
    alphabet_.erase(std::unique(alphabet_.begin(), alphabet_.end()), alphabet_.end());
    codes_.reserve(queries_.size());
    for (const QueryRecord& q : queries_) {
      std::vector<std::uint32_t> row;
      row.reserve(q.size());
      for (const Entry& e : q.entries()) row.push_back(*group_code(e.group));
      codes_.push_back(std::move(row));
    }
  }

  const std::vector<QueryRecord>& queries() const { return queries_; }
  std::size_t size() const { return queries_.size(); }
  bool empty() const { return queries_.empty(); }
  std::size_t max_len() const { return max_len_; }

  // Sorted, de-duplicated group labels.
  const std::vector<std::string>& alphabet() const { return alphabet_; }

  std::optional<std::uint32_t> group_code(const std::string& label) const {
    auto it = std::lower_bound(alphabet_.begin(), alphabet_.end(), label);
    if (it == alphabet_.end() || *it != label) return std::nullopt;
    return static_cast<std::uint32_t>(it - alphabet_.begin());
  }

  // Group codes of query q in rank order.
  const std::vector<std::uint32_t>& codes(std::size_t q) const { return codes_[q]; }

  friend bool operator==(const Dataset& a, const Dataset& b) { return a.queries_ == b.queries_; }

 private:
  std::vector<QueryRecord> queries_;
  std::vector<std::string> alphabet_;
  std::vector<std::vector<std::uint32_t>> codes_;
  std::size_t max_len_ = 0;
};

}  // namespace rankaudit

#endif  // RANKAUDIT_MODEL_HPP_
