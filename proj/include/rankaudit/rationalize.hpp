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

// Sharpness check on a finite-support law of (Y, G) by rank.
//
// If E[Y_a - Y_{a+1} | G = g] >= 0 for every observed g and adjacent a, an
// unbiased ranker can produce the law exactly: give the ranker a private
// signal S, one value per group vector g, with
//
//     P(S = g | multiset of groups = {g}) = P(G = g | {G} = {g}),
//     Y | S = g  ~  Y | G = g.
//
// Under S = g the expected outcome by rank is E[Y_r | G = g], which is
// nonincreasing in r, so listing candidates in the order that yields g is
// optimal for every strictly decreasing positive weight sequence.

#ifndef RANKAUDIT_RATIONALIZE_HPP_
#define RANKAUDIT_RATIONALIZE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "rankaudit/moments.hpp"

namespace rankaudit {

struct SupportPoint {
  std::vector<std::string> groups;
  std::vector<double> outcomes;
  double probability = 0.0;
};

class EmpiricalRankDistribution {
 public:
  explicit EmpiricalRankDistribution(std::vector<SupportPoint> support) : support_(std::move(support)) {
    if (support_.empty()) throw std::invalid_argument("distribution has empty support");
    J_ = support_.front().groups.size();
    if (J_ == 0) throw std::invalid_argument("distribution: lists must be nonempty");
    double total = 0.0;
    for (const SupportPoint& p : support_) {
      if (p.groups.size() != J_ || p.outcomes.size() != J_) {
        throw std::invalid_argument("distribution: every row needs J groups and J outcomes");
      }
      if (!(p.probability >= 0.0) || !std::isfinite(p.probability)) {
        throw std::invalid_argument("distribution: probabilities must be >= 0");
      }
      for (double y : p.outcomes) {
        if (!std::isfinite(y)) throw std::invalid_argument("distribution: non-finite outcome");
      }
      total += p.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) {
      throw std::invalid_argument("distribution: probabilities sum to " + std::to_string(total) +
                                  ", not 1");
    }
  }

  const std::vector<SupportPoint>& support() const { return support_; }
  std::size_t J() const { return J_; }

 private:
  std::vector<SupportPoint> support_;
  std::size_t J_ = 0;
};

struct InequalityViolation {
  std::vector<std::string> groups;
  std::size_t high_rank = 0;  // compares high_rank with high_rank + 1
  double value = 0.0;
};

// Everything the construction assigns to one signal value.
struct SignalStructure {
  std::vector<std::string> groups;          // the pattern g this signal maps to
  std::vector<std::string> group_multiset;  // sorted labels of g
  double pattern_probability = 0.0;         // P(G = g)
  double multiset_probability = 0.0;        // P({G} = {g})
  double signal_given_multiset = 0.0;       // P(S = g | {G} = {g})
  std::vector<std::pair<std::vector<double>, double>> outcome_law;  // Y | S = g
  std::vector<double> conditional_means;    // E[Y_r | S = g]
};

struct RationalizationCertificate {
  bool rationalized = false;
  std::optional<MomentSpec> violated_spec;
  double violation_value = 0.0;
  std::vector<SignalStructure> structure;
  bool means_nonincreasing = false;
  bool reproduces_law = false;
  double max_law_error = 0.0;
  double min_adjacent_gap = 0.0;
};

namespace detail {

struct PatternLaw {
  double probability = 0.0;
  std::map<std::vector<double>, double> outcomes;  // merged support of Y | G = g
};

inline std::map<std::vector<std::string>, PatternLaw> by_pattern(const EmpiricalRankDistribution& d) {
  std::map<std::vector<std::string>, PatternLaw> laws;
  for (const SupportPoint& p : d.support()) {
    if (p.probability == 0.0) continue;
    PatternLaw& law = laws[p.groups];
    law.probability += p.probability;
    law.outcomes[p.outcomes] += p.probability;
  }
  return laws;
}

inline std::vector<double> conditional_means(const PatternLaw& law, std::size_t J) {
  std::vector<double> m(J, 0.0);
  for (const auto& [y, p] : law.outcomes) {
    for (std::size_t r = 0; r < J; ++r) m[r] += y[r] * p;
  }
  for (double& v : m) v /= law.probability;
  return m;
}

}  // namespace detail

// Adjacent-rank inequalities E[Y_a - Y_{a+1} | G = g] that fall below -1e-12.
inline std::vector<InequalityViolation> check_inequalities(const EmpiricalRankDistribution& dist) {
  std::vector<InequalityViolation> out;
  for (const auto& [g, law] : detail::by_pattern(dist)) {
    const std::vector<double> m = detail::conditional_means(law, dist.J());
    for (std::size_t a = 0; a + 1 < dist.J(); ++a) {
      const double gap = m[a] - m[a + 1];
      if (gap < -1e-12) out.push_back({g, a + 1, gap});
    }
  }
  return out;
}

inline RationalizationCertificate construct_information_structure(const EmpiricalRankDistribution& dist) {
  RationalizationCertificate cert;
  const auto violations = check_inequalities(dist);
  if (!violations.empty()) {
    const InequalityViolation& v = violations.front();
    cert.violated_spec =
        MomentSpec{v.high_rank, v.high_rank + 1, PatternCondition{v.groups}, {}, {}};
    cert.violation_value = v.value;
    return cert;
  }

  const auto laws = detail::by_pattern(dist);
  std::map<std::vector<std::string>, double> multiset_prob;
  auto multiset_of = [](std::vector<std::string> g) {
    std::sort(g.begin(), g.end());
    return g;
  };
  for (const auto& [g, law] : laws) multiset_prob[multiset_of(g)] += law.probability;

  for (const auto& [g, law] : laws) {
    SignalStructure s;
    s.groups = g;
    s.group_multiset = multiset_of(g);
    s.pattern_probability = law.probability;
    s.multiset_probability = multiset_prob.at(s.group_multiset);
    s.signal_given_multiset = law.probability / s.multiset_probability;
    for (const auto& [y, p] : law.outcomes) s.outcome_law.emplace_back(y, p / law.probability);
    // Means recomputed from the constructed law, not the input.
    s.conditional_means.assign(dist.J(), 0.0);
    for (const auto& [y, p] : s.outcome_law) {
      for (std::size_t r = 0; r < dist.J(); ++r) s.conditional_means[r] += y[r] * p;
    }
    cert.structure.push_back(std::move(s));
  }

  // (a) Under every signal, expected outcomes are nonincreasing by rank.
  cert.min_adjacent_gap = 0.0;
  bool first = true;
  for (const SignalStructure& s : cert.structure) {
    for (std::size_t r = 0; r + 1 < dist.J(); ++r) {
      const double gap = s.conditional_means[r] - s.conditional_means[r + 1];
      cert.min_adjacent_gap = first ? gap : std::min(cert.min_adjacent_gap, gap);
      first = false;
    }
  }
  cert.means_nonincreasing = cert.min_adjacent_gap >= -1e-10;

  // (b) The implied law P({G}) P(S = g | {G}) P(Y = y | S = g) of the
  // observed (Y, G) matches the input on every support point.
  std::map<std::pair<std::vector<std::string>, std::vector<double>>, double> implied;
  for (const SignalStructure& s : cert.structure) {
    for (const auto& [y, p] : s.outcome_law) {
      implied[{s.groups, y}] += s.multiset_probability * s.signal_given_multiset * p;
    }
  }
  std::map<std::pair<std::vector<std::string>, std::vector<double>>, double> input;
  for (const SupportPoint& p : dist.support()) input[{p.groups, p.outcomes}] += p.probability;
  cert.max_law_error = 0.0;
  for (const auto& [k, p] : input) {
    auto it = implied.find(k);
    cert.max_law_error = std::max(cert.max_law_error, std::abs(p - (it == implied.end() ? 0.0 : it->second)));
  }
  for (const auto& [k, p] : implied) {
    if (!input.contains(k)) cert.max_law_error = std::max(cert.max_law_error, std::abs(p));
  }
  cert.reproduces_law = cert.max_law_error <= 1e-10;
  cert.rationalized = cert.means_nonincreasing && cert.reproduces_law;
  return cert;
}

// Distribution text format: one support point per line,
//
//     <probability> <g1,g2,...,gJ> <y1,y2,...,yJ>
//
// Blank lines and lines starting with '#' are ignored.
inline EmpiricalRankDistribution parse_distribution(std::istream& in) {
  std::vector<SupportPoint> support;
  std::string line;
  std::size_t line_no = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    std::string prob_s, groups_s, outcomes_s, extra;
    if (!(fields >> prob_s >> groups_s >> outcomes_s) || (fields >> extra)) {
      throw std::invalid_argument("distribution line " + std::to_string(line_no) +
                                  ": expected '<probability> <groups> <outcomes>'");
    }
    SupportPoint p;
    try {
      std::size_t used = 0;
      p.probability = std::stod(prob_s, &used);
      if (used != prob_s.size()) throw std::invalid_argument(prob_s);
      p.groups = split(groups_s);
      for (const std::string& y : split(outcomes_s)) {
        p.outcomes.push_back(std::stod(y, &used));
        if (used != y.size()) throw std::invalid_argument(y);
      }
    } catch (const std::logic_error&) {
      throw std::invalid_argument("distribution line " + std::to_string(line_no) +
                                  ": malformed number");
    }
    support.push_back(std::move(p));
  }
  return EmpiricalRankDistribution(std::move(support));
}

inline nlohmann::ordered_json to_json(const RationalizationCertificate& cert) {
  nlohmann::ordered_json j;
  j["status"] = cert.rationalized ? "rationalized" : "violated";
  if (cert.violated_spec) {
    const MomentSpec& s = *cert.violated_spec;
    j["violation"] = {{"high_rank", s.high_rank},
                      {"low_rank", s.low_rank},
                      {"groups", std::get<PatternCondition>(s.conditioning).groups},
                      {"value", cert.violation_value}};
    return j;
  }
  auto& signals = j["signals"] = nlohmann::ordered_json::array();
  for (const SignalStructure& s : cert.structure) {
    nlohmann::ordered_json sj;
    sj["groups"] = s.groups;
    sj["group_multiset"] = s.group_multiset;
    sj["p_pattern"] = s.pattern_probability;
    sj["p_multiset"] = s.multiset_probability;
    sj["p_signal_given_multiset"] = s.signal_given_multiset;
    sj["conditional_means"] = s.conditional_means;
    auto& law = sj["outcome_law"] = nlohmann::ordered_json::array();
    for (const auto& [y, p] : s.outcome_law) law.push_back({{"y", y}, {"p", p}});
    signals.push_back(std::move(sj));
  }
  j["verification"] = {{"means_nonincreasing", cert.means_nonincreasing},
                       {"min_adjacent_gap", cert.min_adjacent_gap},
                       {"reproduces_law", cert.reproduces_law},
                       {"max_law_error", cert.max_law_error}};
  return j;
}

}  // namespace rankaudit

#endif  // RANKAUDIT_RATIONALIZE_HPP_
