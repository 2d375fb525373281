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

// Pointwise and joint tests of the moment inequalities E[m] >= 0.
//
// Pointwise: one-sided t-test on the conditional mean, p = Phi(t); small p
// means the observed mean is significantly below zero.
//
// Joint (least favorable): the statistic is
//
//     T = max_j  -sqrt(n_j) * mean_j / sd_j
//
// over the unconditional moments. Its null distribution is approximated by
// the max of a N(0, Omega) vector, Omega the estimated correlation of the
// moments, i.e. every inequality is taken to bind. This is the most
// conservative point of the composite null.

#ifndef RANKAUDIT_INFERENCE_HPP_
#define RANKAUDIT_INFERENCE_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>

#include "rankaudit/moments.hpp"
#include "rankaudit/random.hpp"

namespace rankaudit {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

struct PointwiseResult {
  MomentSpec spec;
  bool defined = false;  // false when fewer than two matched queries
  double t_stat = std::numeric_limits<double>::quiet_NaN();
  double p_value = std::numeric_limits<double>::quiet_NaN();
  double ci_lower = std::numeric_limits<double>::quiet_NaN();
  double ci_upper = std::numeric_limits<double>::quiet_NaN();
};

// H0: mean >= 0 against H1: mean < 0. With a zero standard error the
// p-value is 1, 0 or 0.5 for a positive, negative or zero mean.
inline PointwiseResult pointwise_test(const MomentEstimate& est) {
  PointwiseResult r;
  r.spec = est.spec;
  if (est.n_matched < 2) return r;
  r.defined = true;
  const double mean = est.mean_conditional;
  const double se = est.se_conditional;
  const double z = normal_quantile(0.975);
  r.ci_lower = mean - z * se;
  r.ci_upper = mean + z * se;
  if (se > 0.0) {
    r.t_stat = mean / se;
    r.p_value = normal_cdf(r.t_stat);
  } else if (mean > 0.0) {
    r.t_stat = std::numeric_limits<double>::infinity();
    r.p_value = 1.0;
  } else if (mean < 0.0) {
    r.t_stat = -std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else {
    r.t_stat = 0.0;
    r.p_value = 0.5;
  }
  return r;
}

enum class JointMethod { LeastFavorable, Bonferroni };

inline const char* to_string(JointMethod m) {
  return m == JointMethod::LeastFavorable ? "lf" : "bonferroni";
}

struct JointOptions {
  double alpha = 0.05;
  std::size_t mc_reps = 10000;
  std::uint64_t seed = 0;
  std::size_t min_n = 30;
};

struct JointResult {
  std::string subset = "all";
  JointMethod method = JointMethod::LeastFavorable;
  std::size_t K = 0;
  double T_stat = std::numeric_limits<double>::quiet_NaN();
  std::map<double, double> critical_values;  // alpha -> c_alpha
  double p_value = std::numeric_limits<double>::quiet_NaN();
  double alpha = 0.05;
  bool reject = false;
  std::size_t mc_reps = 0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> moments;  // indices into the input estimates
  std::vector<std::string> warnings;
};

class NoTestableMoments : public std::runtime_error {
 public:
  NoTestableMoments() : std::runtime_error("no testable moments") {}
};

namespace detail {

struct Selection {
  std::vector<std::size_t> kept;
  std::vector<std::string> warnings;
};

// Moments enter a joint test when they have at least min_n matched queries
// and a positive unconditional variance.
inline Selection select_testable(std::span<const MomentEstimate> estimates,
                                 std::span<const std::size_t> candidates, std::size_t min_n) {
  Selection s;
  const std::size_t floor_n = std::max<std::size_t>(min_n, 2);
  std::size_t small = 0;
  for (std::size_t i : candidates) {
    const MomentEstimate& e = estimates[i];
    if (e.n_matched < floor_n) {
      ++small;
      continue;
    }
    if (!(e.se_unconditional > 0.0)) {
      s.warnings.push_back("dropped zero-variance moment " + describe(e.spec));
      continue;
    }
    s.kept.push_back(i);
  }
  if (small > 0) {
    s.warnings.push_back(std::to_string(small) + " moment(s) below min_n=" +
                         std::to_string(floor_n) + " excluded from the joint test");
  }
  return s;
}

inline std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

// Correlation of the moments' per-query contributions. Contributions are
// centered within each moment's usable queries and zero elsewhere, so that
// entry (j, k) is the correlation of sqrt(n_j) mean_j and sqrt(n_k) mean_k
// even when the two moments use different query sets.
inline Eigen::MatrixXd contribution_correlation(std::span<const MomentEstimate> estimates,
                                                std::span<const std::size_t> kept) {
  const std::size_t n_queries = estimates[kept[0]].contributions.size();
  const auto K = static_cast<Eigen::Index>(kept.size());
  Eigen::MatrixXd centered = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_queries), K);
  for (Eigen::Index j = 0; j < K; ++j) {
    const MomentEstimate& e = estimates[kept[static_cast<std::size_t>(j)]];
    if (e.contributions.size() != n_queries) {
      throw std::invalid_argument("joint test: estimates come from different datasets");
    }
    for (std::size_t q = 0; q < n_queries; ++q) {
      if (e.roles[q] != QueryRole::Excluded) {
        centered(static_cast<Eigen::Index>(q), j) = e.contributions[q] - e.mean_unconditional;
      }
    }
  }
  Eigen::MatrixXd cross = centered.transpose() * centered;
  const Eigen::VectorXd inv_sd = cross.diagonal().cwiseSqrt().cwiseInverse();
  return inv_sd.asDiagonal() * cross * inv_sd.asDiagonal();
}

// Symmetric square root V diag(sqrt(max(lambda, 1e-10))) V^T.
inline Eigen::MatrixXd symmetric_factor(const Eigen::MatrixXd& corr) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(corr);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("joint test: eigendecomposition failed");
  }
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(1e-10).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

// Max over coordinates of mc_reps draws from N(0, factor factor^T). Draw i
// uses substream i under the seed's key; blocks have a fixed size so the
// arithmetic is identical however the work is scheduled.
inline std::vector<double> simulate_max_normals(const Eigen::MatrixXd& factor, std::size_t mc_reps,
                                                std::uint64_t seed) {
  constexpr std::size_t kBlock = 256;
  const Eigen::Index K = factor.rows();
  const std::uint64_t key = random::mix64(seed);
  std::vector<double> maxes(mc_reps);
  Eigen::MatrixXd draws(kBlock, K);
  for (std::size_t start = 0; start < mc_reps; start += kBlock) {
    const std::size_t rows = std::min(kBlock, mc_reps - start);
    for (std::size_t i = 0; i < rows; ++i) {
      random::Stream stream(key, start + i);
      for (Eigen::Index k = 0; k < K; ++k) draws(static_cast<Eigen::Index>(i), k) = stream.normal();
    }
    // Rows past `rows` hold stale values and are ignored.
    const Eigen::MatrixXd correlated = draws * factor;
    for (std::size_t i = 0; i < rows; ++i) {
      maxes[start + i] = correlated.row(static_cast<Eigen::Index>(i)).maxCoeff();
    }
  }
  return maxes;
}

inline std::vector<double> critical_alphas(double alpha) {
  std::vector<double> a{0.01, 0.05, 0.10};
  if (std::find(a.begin(), a.end(), alpha) == a.end()) a.push_back(alpha);
  std::sort(a.begin(), a.end());
  return a;
}

inline JointResult joint_lf_on(std::span<const MomentEstimate> estimates,
                               std::span<const std::size_t> candidates, const JointOptions& opt) {
  if (opt.mc_reps < 1) throw std::invalid_argument("joint test: mc_reps must be positive");
  Selection sel = select_testable(estimates, candidates, opt.min_n);
  if (sel.kept.empty()) throw NoTestableMoments();

  JointResult r;
  r.method = JointMethod::LeastFavorable;
  r.alpha = opt.alpha;
  r.mc_reps = opt.mc_reps;
  r.seed = opt.seed;
  r.moments = sel.kept;
  r.warnings = std::move(sel.warnings);
  r.K = sel.kept.size();

  r.T_stat = -std::numeric_limits<double>::infinity();
  for (std::size_t i : sel.kept) {
    const MomentEstimate& e = estimates[i];
    r.T_stat = std::max(r.T_stat, -e.mean_unconditional / e.se_unconditional);
  }

  const Eigen::MatrixXd factor = symmetric_factor(contribution_correlation(estimates, sel.kept));
  std::vector<double> maxes = simulate_max_normals(factor, opt.mc_reps, opt.seed);

  const auto hits = static_cast<std::size_t>(
      std::count_if(maxes.begin(), maxes.end(), [&](double m) { return m >= r.T_stat; }));
  r.p_value = static_cast<double>(1 + hits) / static_cast<double>(opt.mc_reps + 1);

  std::sort(maxes.begin(), maxes.end());
  for (double a : critical_alphas(opt.alpha)) {
    const double pos = std::ceil((1.0 - a) * static_cast<double>(opt.mc_reps));
    const std::size_t idx = std::clamp<std::size_t>(static_cast<std::size_t>(pos), 1, opt.mc_reps) - 1;
    r.critical_values[a] = maxes[idx];
  }
  r.reject = r.T_stat > r.critical_values.at(opt.alpha);
  return r;
}

inline JointResult joint_bonferroni_on(std::span<const MomentEstimate> estimates,
                                       std::span<const std::size_t> candidates,
                                       const JointOptions& opt) {
  Selection sel = select_testable(estimates, candidates, opt.min_n);
  if (sel.kept.empty()) throw NoTestableMoments();

  JointResult r;
  r.method = JointMethod::Bonferroni;
  r.alpha = opt.alpha;
  r.seed = opt.seed;
  r.moments = sel.kept;
  r.warnings = std::move(sel.warnings);
  r.K = sel.kept.size();

  // Statistic on the pointwise scale: the largest -t.
  double min_p = 1.0;
  r.T_stat = -std::numeric_limits<double>::infinity();
  for (std::size_t i : sel.kept) {
    const PointwiseResult pw = pointwise_test(estimates[i]);
    min_p = std::min(min_p, pw.p_value);
    r.T_stat = std::max(r.T_stat, -pw.t_stat);
  }
  const double K = static_cast<double>(r.K);
  r.p_value = std::min(1.0, K * min_p);
  for (double a : critical_alphas(opt.alpha)) {
    r.critical_values[a] = -normal_quantile(a / K);
  }
  r.reject = r.p_value <= opt.alpha;
  return r;
}

}  // namespace detail

// Least-favorable joint test over all estimates. Throws NoTestableMoments
// when nothing survives the min-n and zero-variance filters.
inline JointResult joint_test_lf(std::span<const MomentEstimate> estimates, const JointOptions& opt) {
  const auto all = detail::all_indices(estimates.size());
  return detail::joint_lf_on(estimates, all, opt);
}

// p = min(1, K * min_j p_j) over the pointwise p-values.
inline JointResult joint_test_bonferroni(std::span<const MomentEstimate> estimates,
                                         const JointOptions& opt) {
  const auto all = detail::all_indices(estimates.size());
  return detail::joint_bonferroni_on(estimates, all, opt);
}

inline JointResult joint_test(std::span<const MomentEstimate> estimates, JointMethod method,
                              const JointOptions& opt) {
  return method == JointMethod::LeastFavorable ? joint_test_lf(estimates, opt)
                                               : joint_test_bonferroni(estimates, opt);
}

// Subset label for a compared group pair. Single-character labels are
// concatenated ("FM" = F above M); longer labels are joined with '>'.
inline std::string subset_label(const std::string& high, const std::string& low) {
  if (high.size() == 1 && low.size() == 1) return high + low;
  return high + ">" + low;
}

inline std::string subset_label(const MomentSpec& spec) {
  const auto [high, low] = compared_groups(spec);
  return subset_label(high, low);
}

struct SubsetTests {
  std::vector<JointResult> results;  // "all" first, then subsets by label
  std::vector<std::string> warnings;
};

// One joint test over every estimate plus one per compared group pair.
// Subsets with nothing testable are omitted with a warning; if nothing is
// testable overall, NoTestableMoments is thrown.
inline SubsetTests subset_joint_tests(std::span<const MomentEstimate> estimates, JointMethod method,
                                      const JointOptions& opt) {
  auto run = [&](std::span<const std::size_t> idx) {
    return method == JointMethod::LeastFavorable ? detail::joint_lf_on(estimates, idx, opt)
                                                 : detail::joint_bonferroni_on(estimates, idx, opt);
  };
  SubsetTests out;
  const auto all = detail::all_indices(estimates.size());
  out.results.push_back(run(all));

  std::map<std::string, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    buckets[subset_label(estimates[i].spec)].push_back(i);
  }
  for (const auto& [label, idx] : buckets) {
    try {
      JointResult r = run(idx);
      r.subset = label;
      out.results.push_back(std::move(r));
    } catch (const NoTestableMoments&) {
      out.warnings.push_back("subset " + label + " has no testable moments; omitted");
    }
  }
  return out;
}

}  // namespace rankaudit

#endif  // RANKAUDIT_INFERENCE_HPP_
