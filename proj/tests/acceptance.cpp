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

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Monte Carlo designs and seeds are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rankaudit/rankaudit.hpp"

namespace {

using namespace rankaudit;
using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kSeed = 20260101;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// 1. Swap identity and optimality of sorting.
Outcome swap_and_sort() {
  const auto t0 = Clock::now();
  const WeightScheme schemes[] = {WeightScheme::ndcg(), WeightScheme::geometric(0.1),
                                  WeightScheme::explicit_weights({6, 5, 4, 3, 2, 1})};
  double worst = 0.0;
  std::size_t sort_mismatch = 0;
  for (std::uint64_t q = 0; q < 1000; ++q) {
    random::Stream s(random::derive_key(kSeed + 1, q), 0);
    const std::size_t J = 1 + static_cast<std::size_t>(s.uniform() * 6);
    std::vector<double> mu(J);
    for (double& v : mu) v = s.uniform();
    for (const WeightScheme& w : schemes) {
      for (std::size_t a = 0; a < J; ++a) {
        for (std::size_t b = a + 1; b < J; ++b) {
          std::vector<double> swapped = mu;
          std::swap(swapped[a], swapped[b]);
          const double delta = dcg(mu, w) - dcg(swapped, w);
          const double expect = (w.weight(a + 1) - w.weight(b + 1)) * (mu[a] - mu[b]);
          worst = std::max(worst, std::abs(delta - expect));
        }
      }
      // Exhaustive search; continuous draws make the argmax unique.
      std::vector<std::size_t> perm(J), best;
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      double best_value = -1e300;
      do {
        double v = 0.0;
        for (std::size_t r = 0; r < J; ++r) v += w.weight(r + 1) * mu[perm[r]];
        if (v > best_value) {
          best_value = v;
          best = perm;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
      if (optimal_ranking(mu) != best) ++sort_mismatch;
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && sort_mismatch == 0 && secs < 10.0,
          "max swap error " + fmt("%.2e", worst) + ", sort mismatches " +
              std::to_string(sort_mismatch) + ", " + fmt("%.2f s", secs)};
}

Dataset random_dataset(std::uint64_t seed, std::size_t n, std::size_t max_len) {
  std::vector<QueryRecord> qs;
  for (std::size_t q = 0; q < n; ++q) {
    random::Stream s(random::derive_key(seed, q), 0);
    const std::size_t J = 3 + static_cast<std::size_t>(s.uniform() * (max_len - 2));
    std::vector<Entry> entries;
    for (std::size_t j = 0; j < J; ++j) {
      entries.push_back({s.uniform() < 0.5 ? "A" : "B", s.normal() * 3.0 + 1.0, {}});
    }
    qs.emplace_back("q" + std::to_string(q), std::move(entries));
  }
  return Dataset(std::move(qs));
}

// 2. Telescoping of full-pattern moments.
Outcome telescoping() {
  double worst = 0.0;
  std::size_t triples = 0;
  for (std::uint64_t d = 0; d < 10; ++d) {
    const Dataset data = random_dataset(random::derive_key(kSeed + 2, d), 2000, 6);
    std::set<std::vector<std::string>> patterns;
    for (const QueryRecord& q : data.queries()) {
      std::vector<std::string> g;
      for (const Entry& e : q.entries()) g.push_back(e.group);
      patterns.insert(g);
    }
    for (const auto& g : patterns) {
      for (std::size_t a = 1; a <= g.size(); ++a) {
        for (std::size_t b = a + 1; b <= g.size(); ++b) {
          for (std::size_t c = b + 1; c <= g.size(); ++c) {
            const auto m = telescope_check(data, g, a, b, c);
            worst = std::max(worst, std::abs(m[2] - (m[0] + m[1])));
            ++triples;
          }
        }
      }
    }
  }
  return {worst <= 1e-10,
          std::to_string(triples) + " triples, max error " + fmt("%.2e", worst)};
}

// 3. Inequalities hold exactly when an information structure exists.
Outcome sharpness() {
  std::size_t agree = 0, rationalized = 0, certified = 0;
  const std::size_t total = 200;
  for (std::uint64_t t = 0; t < total; ++t) {
    random::Stream s(random::derive_key(kSeed + 3, t), 0);
    const std::size_t J = 2 + static_cast<std::size_t>(s.uniform() * 3);
    const std::size_t levels = 2 + static_cast<std::size_t>(s.uniform() * 4);
    const std::size_t points = 1 + static_cast<std::size_t>(s.uniform() * 8);
    std::vector<SupportPoint> support;
    std::vector<double> weight;
    for (std::size_t k = 0; k < points; ++k) {
      SupportPoint p;
      for (std::size_t r = 0; r < J; ++r) {
        p.groups.push_back(s.uniform() < 0.5 ? "F" : "M");
        p.outcomes.push_back(std::floor(s.uniform() * static_cast<double>(levels)));
      }
      // Half the draws sort outcomes downward so both verdicts are common.
      if (t % 2 == 0) std::sort(p.outcomes.rbegin(), p.outcomes.rend());
      weight.push_back(0.05 + s.uniform());
      support.push_back(std::move(p));
    }
    const double sum = std::accumulate(weight.begin(), weight.end(), 0.0);
    double assigned = 0.0;
    for (std::size_t k = 0; k + 1 < points; ++k) {
      support[k].probability = weight[k] / sum;
      assigned += support[k].probability;
    }
    support.back().probability = 1.0 - assigned;

    const EmpiricalRankDistribution dist(support);
    const bool no_violation = check_inequalities(dist).empty();
    const RationalizationCertificate cert = construct_information_structure(dist);
    if (cert.rationalized == no_violation) ++agree;
    if (cert.rationalized) {
      ++rationalized;
      if (cert.min_adjacent_gap >= -1e-10 && cert.max_law_error <= 1e-10) ++certified;
    }
  }
  return {agree == total && certified == rationalized,
          std::to_string(agree) + "/" + std::to_string(total) + " verdicts agree, " +
              std::to_string(certified) + "/" + std::to_string(rationalized) +
              " certificates verified"};
}

double binomial_bound(double alpha, std::size_t n) {
  return alpha + 2.0 * std::sqrt(alpha * (1.0 - alpha) / static_cast<double>(n));
}

SimConfig base_design() {
  SimConfig c;
  c.J = 11;
  c.Q = 1000;
  c.p_group = 0.5;
  c.quality = Uniform01{};
  c.noise = BernoulliNoise{};
  return c;
}

PowerOptions power_options(std::uint64_t seed, std::size_t reps) {
  PowerOptions o;
  o.alpha = 0.05;
  o.reps = reps;
  o.seed = seed;
  o.mc_reps = 10000;
  return o;
}

std::string rate_text(const PowerRow& r) {
  return std::to_string(r.rejections) + "/" + std::to_string(r.reps) + " = " +
         fmt("%.4f", r.rejection_rate) + " (mc_se " + fmt("%.4f", r.mc_se) + ")";
}

// 4 and 8 share one null run.
std::pair<Outcome, Outcome> size_and_pointwise() {
  const auto t0 = Clock::now();
  const auto rows = run_size_power({base_design()}, power_options(kSeed + 4, 500));
  const PowerRow& row = rows.front();
  const double bound = binomial_bound(0.05, 500);
  Outcome size{row.rejection_rate <= bound && row.untestable == 0,
               "rate " + rate_text(row) + " <= " + fmt("%.4f", bound) + ", " +
                   fmt("%.1f s", seconds_since(t0))};

  std::size_t ok = 0;
  double worst_excess = -1.0;
  std::string worst_label;
  for (const PointwiseTally& t : row.pointwise) {
    if (t.defined == 0) {
      ++ok;
      continue;
    }
    const double rate = static_cast<double>(t.rejections) / static_cast<double>(t.defined);
    const double excess = rate - binomial_bound(0.05, t.defined);
    if (excess <= 0.0) ++ok;
    if (excess > worst_excess || worst_label.empty()) {
      worst_excess = excess;
      worst_label = t.label + " rate " + fmt("%.4f", rate);
    }
  }
  Outcome pointwise{ok == row.pointwise.size() && !row.pointwise.empty(),
                    std::to_string(ok) + "/" + std::to_string(row.pointwise.size()) +
                        " moments within bound; closest: " + worst_label};
  return {size, pointwise};
}

// 5. Power rises with tau.
Outcome power() {
  const auto t0 = Clock::now();
  std::vector<SimConfig> grid;
  for (double tau : {0.0, 0.2, 0.5}) {
    SimConfig c = base_design();
    c.Q = 2000;
    c.tau = tau;
    grid.push_back(c);
  }
  const auto rows = run_size_power(grid, power_options(kSeed + 5, 500));
  bool monotone = true;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double se = std::hypot(rows[i].mc_se, rows[i - 1].mc_se);
    monotone = monotone && rows[i].rejection_rate >= rows[i - 1].rejection_rate - 2.0 * se;
  }
  const bool strong = rows[2].rejection_rate >= 0.9;
  return {monotone && strong, "tau 0: " + rate_text(rows[0]) + "; tau 0.2: " + rate_text(rows[1]) +
                                  "; tau 0.5: " + rate_text(rows[2]) + ", " +
                                  fmt("%.1f s", seconds_since(t0))};
}

// 6. Sign pattern of Pair moments under a penalty on group "1".
Outcome sign_pattern() {
  SimConfig c = base_design();
  c.Q = 5000;
  c.tau = 0.5;
  c.seed = kSeed + 6;
  const Dataset data = simulate_dataset(c);
  const auto estimates =
      estimate_family(data, build_adjacent_family(data, ConditioningMode::Pair, {}));
  std::size_t favored_above = 0, favored_negative = 0, penalized_above = 0, penalized_positive = 0;
  for (const MomentEstimate& e : estimates) {
    const auto [hi, lo] = compared_groups(e.spec);
    if (hi == lo || e.n_matched == 0) continue;
    if (hi == "0") {
      ++favored_above;
      favored_negative += e.mean_conditional < 0.0;
    } else {
      ++penalized_above;
      penalized_positive += e.mean_conditional > 0.0;
    }
  }
  return {favored_above == 10 && penalized_above == 10 && favored_negative == 10 &&
              penalized_positive == 10,
          "favored-above-penalized negative at " + std::to_string(favored_negative) + "/" +
              std::to_string(favored_above) + " ranks; penalized-above-favored positive at " +
              std::to_string(penalized_positive) + "/" + std::to_string(penalized_above)};
}

// 7. Position effect: matching adjustment keeps size, ignoring it over-rejects.
Outcome position_effect() {
  SimConfig c = base_design();
  c.gamma = 0.1;
  PowerOptions matched = power_options(kSeed + 7, 500);
  matched.audit.gamma = 0.1;
  PowerOptions ignored = power_options(kSeed + 7, 500);
  ignored.audit.gamma = 0.0;
  const PowerRow a = run_size_power({c}, matched).front();
  const PowerRow b = run_size_power({c}, ignored).front();
  const bool size_ok = a.rejection_rate <= binomial_bound(0.05, 500);
  const bool over = b.rejection_rate > 0.05 + 2.0 * b.mc_se;
  return {size_ok && over, std::string("audit gamma 0.1: ") + rate_text(a) +
                               (size_ok ? " [ok]" : " [FAIL]") + "; audit gamma 0: " + rate_text(b) +
                               (over ? " [ok]" : " [FAIL: not above 0.05 + 2 mc_se]")};
}

// 9. Determinism and round trip.
Outcome determinism() {
  SimConfig c = base_design();
  c.Q = 400;
  c.tau = 0.2;
  c.seed = kSeed + 9;
  auto jsonl = [](const Dataset& d) {
    std::ostringstream out;
    write_jsonl(out, d);
    return out.str();
  };
  const Dataset d1 = simulate_dataset(c);
  const Dataset d2 = simulate_dataset(c);
  const bool same_data = jsonl(d1) == jsonl(d2);

  std::istringstream in(jsonl(d1));
  const bool round_trip = read_jsonl(in).dataset == d1;

  AuditConfig cfg;
  cfg.seed = 5;
  cfg.mc_reps = 2000;
  auto artifacts = [&](const Dataset& d) {
    const TestReport r = run_audit(d, cfg);
    std::ostringstream csv;
    write_moments_csv(csv, r);
    return to_json(r).dump(2) + "\n--\n" + csv.str() + "\n--\n" + render_moments_svg(r);
  };
  const bool same_report = artifacts(d1) == artifacts(d2);

  std::vector<ScoredRow> rows;
  random::Stream s(kSeed + 9, 1);
  for (int i = 0; i < 500; ++i) rows.push_back({i % 2 ? "F" : "M", s.uniform(), s.uniform()});
  auto calib = [&] {
    std::ostringstream out;
    const CalibrationResult r = binned_calibration(rows, 10);
    write_calibration_csv(out, r);
    return out.str() + render_calibration_svg(r);
  };
  const bool same_calib = calib() == calib();
  return {same_data && round_trip && same_report && same_calib,
          std::string("dataset bytes ") + (same_data ? "equal" : "DIFFER") + ", round trip " +
              (round_trip ? "exact" : "LOSSY") + ", report/csv/svg " +
              (same_report ? "equal" : "DIFFER") + ", calibration " + (same_calib ? "equal" : "DIFFER")};
}

// 10. A fixed small penalty becomes easier to detect in longer lists.
Outcome inframarginality() {
  const auto t0 = Clock::now();
  const auto rows = inframarginality_experiment({2, 50}, 0.02, 2000, power_options(kSeed + 10, 300));
  // rows: (J=2, 0), (J=2, 0.02), (J=50, 0), (J=50, 0.02)
  const PowerRow& short_list = rows[1];
  const PowerRow& long_list = rows[3];
  const double se = std::hypot(short_list.mc_se, long_list.mc_se);
  const double gap = long_list.rejection_rate - short_list.rejection_rate;
  return {gap > 2.0 * se, "J=2: " + rate_text(short_list) + "; J=50: " + rate_text(long_list) +
                              "; difference " + fmt("%.4f", gap) + " vs 2 se " + fmt("%.4f", 2.0 * se) +
                              " (tau=0 rows: " + fmt("%.4f", rows[0].rejection_rate) + ", " +
                              fmt("%.4f", rows[2].rejection_rate) + "), " +
                              fmt("%.1f s", seconds_since(t0))};
}

}  // namespace

int main() {
  std::map<int, std::pair<std::string, Outcome>> results;
  auto report = [&](int id, const std::string& name, const Outcome& o) {
    std::printf("%s criterion %d: %s -- %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
    results[id] = {name, o};
  };
  report(1, "swap identity and sorting optimality", swap_and_sort());
  report(2, "telescoping of full-pattern moments", telescoping());
  report(3, "inequalities iff rationalizable", sharpness());
  const auto [size, pointwise] = size_and_pointwise();
  report(4, "joint test size at tau = 0", size);
  report(5, "power increasing in tau", power());
  report(6, "sign pattern of pair moments", sign_pattern());
  report(7, "position-effect correction", position_effect());
  report(8, "pointwise calibration under the null", pointwise);
  report(9, "determinism and round trip", determinism());
  report(10, "inframarginality trend in J", inframarginality());

  int failed = 0;
  for (const auto& [id, r] : results) failed += r.second.pass ? 0 : 1;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
