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

// Synthetic ranked lists from unbiased and taste-biased rankers, and a
// Monte Carlo harness for the size and power of the joint test.
//
// Per query, each candidate j gets a latent expected quality mu_j and a
// group G_j in {0, 1}. The ranker sorts by mu_j - tau * G_j. The realized
// outcome is drawn around mu_j and, with a position effect gamma, shrunk by
// (1 + gamma)^(-rank), so position_adjust(query, gamma) recovers the
// position-free outcome.

#ifndef RANKAUDIT_SIMULATE_HPP_
#define RANKAUDIT_SIMULATE_HPP_

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "rankaudit/inference.hpp"
#include "rankaudit/model.hpp"
#include "rankaudit/moments.hpp"
#include "rankaudit/random.hpp"

namespace rankaudit {

struct Uniform01 {};
struct NormalQuality {
  double mean = 0.0;
  double sd = 1.0;
};
using QualityLaw = std::variant<Uniform01, NormalQuality>;

struct BernoulliNoise {};
struct NormalNoise {
  double sd = 1.0;
};
using OutcomeNoise = std::variant<BernoulliNoise, NormalNoise>;

struct SimConfig {
  std::size_t J = 11;
  std::size_t Q = 1000;
  double p_group = 0.5;
  QualityLaw quality = Uniform01{};
  double tau = 0.0;
  double gamma = 0.0;
  OutcomeNoise noise = BernoulliNoise{};
  std::uint64_t seed = 0;

  void validate() const {
    if (J < 2) throw std::invalid_argument("SimConfig: J must be >= 2");
    if (Q < 1) throw std::invalid_argument("SimConfig: Q must be >= 1");
    if (!(p_group > 0.0 && p_group < 1.0)) {
      throw std::invalid_argument("SimConfig: p_group must be in (0, 1)");
    }
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
      throw std::invalid_argument("SimConfig: tau must be >= 0");
    }
    if (!(gamma > -1.0) || !std::isfinite(gamma)) {
      throw std::invalid_argument("SimConfig: gamma must be > -1");
    }
    if (const auto* n = std::get_if<NormalQuality>(&quality); n && !(n->sd > 0.0)) {
      throw std::invalid_argument("SimConfig: quality sd must be positive");
    }
    if (const auto* n = std::get_if<NormalNoise>(&noise); n && !(n->sd >= 0.0)) {
      throw std::invalid_argument("SimConfig: noise sd must be >= 0");
    }
    if (std::holds_alternative<BernoulliNoise>(noise) &&
        !std::holds_alternative<Uniform01>(quality)) {
      throw std::invalid_argument("SimConfig: Bernoulli outcomes need Uniform01 qualities");
    }
  }
};

// A simulated query together with the latent qualities, in rank order.
struct SimulatedQuery {
  QueryRecord record;
  std::vector<double> quality_by_rank;
  std::vector<double> position_free_outcome_by_rank;
};

inline SimulatedQuery simulate_query(const SimConfig& config, std::size_t query_index) {
  const std::uint64_t key = random::derive_key(config.seed, query_index);
  std::vector<double> mu(config.J);
  std::vector<int> group(config.J);
  std::vector<double> y(config.J);
  std::vector<double> score(config.J);
  for (std::size_t j = 0; j < config.J; ++j) {
    random::Stream stream(key, j);
    if (const auto* n = std::get_if<NormalQuality>(&config.quality)) {
      mu[j] = n->mean + n->sd * stream.normal();
    } else {
      mu[j] = stream.uniform();
    }
    group[j] = stream.uniform() < config.p_group ? 1 : 0;
    if (const auto* n = std::get_if<NormalNoise>(&config.noise)) {
      y[j] = mu[j] + n->sd * stream.normal();
    } else {
      y[j] = stream.uniform() < mu[j] ? 1.0 : 0.0;
    }
    score[j] = mu[j] - config.tau * group[j];
  }

  const std::vector<std::size_t> order = optimal_ranking(score);
  std::vector<Entry> entries;
  std::vector<double> quality_by_rank;
  std::vector<double> free_by_rank;
  for (std::size_t r = 0; r < config.J; ++r) {
    const std::size_t j = order[r];
    double observed = y[j];
    if (config.gamma != 0.0) {
      observed *= std::pow(1.0 + config.gamma, -static_cast<double>(r + 1));
    }
    entries.push_back(Entry{group[j] ? "1" : "0", observed, {}});
    quality_by_rank.push_back(mu[j]);
    free_by_rank.push_back(y[j]);
  }
  return {QueryRecord("q" + std::to_string(query_index), std::move(entries)),
          std::move(quality_by_rank), std::move(free_by_rank)};
}

inline Dataset simulate_dataset(const SimConfig& config) {
  config.validate();
  std::vector<QueryRecord> queries;
  queries.reserve(config.Q);
  for (std::size_t q = 0; q < config.Q; ++q) {
    queries.push_back(simulate_query(config, q).record);
  }
  return Dataset(std::move(queries));
}

struct PowerOptions {
  double alpha = 0.05;
  std::size_t reps = 500;
  std::uint64_t seed = 0;
  std::size_t mc_reps = 10000;
  std::size_t min_n = 30;
  Adjustment audit;  // adjustment the auditor applies
  unsigned threads = 0;  // 0 = hardware concurrency
};

struct PointwiseTally {
  std::string label;
  std::size_t defined = 0;
  std::size_t rejections = 0;  // p <= alpha
};

struct PowerRow {
  SimConfig config;
  std::size_t reps = 0;
  std::size_t rejections = 0;
  std::size_t untestable = 0;  // replications with no testable moment
  double rejection_rate = 0.0;
  double mc_se = 0.0;  // binomial standard error of the rate
  std::vector<PointwiseTally> pointwise;
};

namespace detail {

struct ReplicationOutcome {
  bool rejected = false;
  bool untestable = false;
  std::vector<std::pair<std::string, std::optional<double>>> pointwise_p;
};

inline ReplicationOutcome run_replication(SimConfig config, const PowerOptions& opt, std::size_t rep) {
  config.seed = random::derive_key(opt.seed, 2 * rep);
  const Dataset data = simulate_dataset(config);
  const auto family = build_adjacent_family(data, ConditioningMode::Pair, opt.audit);
  const auto estimates = estimate_family(data, family);

  ReplicationOutcome out;
  for (const MomentEstimate& e : estimates) {
    const PointwiseResult pw = pointwise_test(e);
    out.pointwise_p.emplace_back(describe(e.spec),
                                 pw.defined ? std::optional<double>(pw.p_value) : std::nullopt);
  }
  JointOptions jo;
  jo.alpha = opt.alpha;
  jo.mc_reps = opt.mc_reps;
  jo.min_n = opt.min_n;
  jo.seed = random::derive_key(opt.seed, 2 * rep + 1);
  try {
    out.rejected = joint_test_lf(estimates, jo).reject;
  } catch (const NoTestableMoments&) {
    out.untestable = true;
  }
  return out;
}

// Runs f(i) for i in [0, n) on a pool of threads. Each index writes only
// its own output slot.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) f(i);
    });
  }
}

}  // namespace detail

// Rejection frequency of the default audit (adjacent Pair moments, LF joint
// test) for each configuration. Replication r uses the same seeds under
// every configuration, so rows are driven by common random numbers.
inline std::vector<PowerRow> run_size_power(const std::vector<SimConfig>& grid, const PowerOptions& opt) {
  if (opt.reps < 1) throw std::invalid_argument("run_size_power: reps must be positive");
  std::vector<PowerRow> rows;
  for (const SimConfig& config : grid) {
    config.validate();
    std::vector<detail::ReplicationOutcome> outcomes(opt.reps);
    detail::parallel_for(opt.reps, opt.threads, [&](std::size_t rep) {
      outcomes[rep] = detail::run_replication(config, opt, rep);
    });

    PowerRow row;
    row.config = config;
    row.reps = opt.reps;
    std::map<std::string, std::size_t> slot;
    for (const auto& o : outcomes) {
      row.rejections += o.rejected ? 1 : 0;
      row.untestable += o.untestable ? 1 : 0;
      for (const auto& [label, p] : o.pointwise_p) {
        auto [it, inserted] = slot.try_emplace(label, row.pointwise.size());
        if (inserted) row.pointwise.push_back({label, 0, 0});
        PointwiseTally& tally = row.pointwise[it->second];
        if (p) {
          ++tally.defined;
          if (*p <= opt.alpha) ++tally.rejections;
        }
      }
    }
    const double n = static_cast<double>(opt.reps);
    row.rejection_rate = static_cast<double>(row.rejections) / n;
    row.mc_se = std::sqrt(row.rejection_rate * (1.0 - row.rejection_rate) / n);
    rows.push_back(std::move(row));
  }
  return rows;
}

// Size (tau = 0) and power (tau = tau_small) as the list length J grows.
// Rows come in pairs per J: first tau = 0, then tau_small.
inline std::vector<PowerRow> inframarginality_experiment(const std::vector<std::size_t>& J_grid,
                                                         double tau_small, std::size_t Q,
                                                         const PowerOptions& opt) {
  if (!(tau_small > 0.0)) throw std::invalid_argument("inframarginality: tau_small must be > 0");
  std::vector<SimConfig> grid;
  for (std::size_t J : J_grid) {
    for (double tau : {0.0, tau_small}) {
      SimConfig c;
      c.J = J;
      c.Q = Q;
      c.tau = tau;
      grid.push_back(c);
    }
  }
  return run_size_power(grid, opt);
}

}  // namespace rankaudit

#endif  // RANKAUDIT_SIMULATE_HPP_
