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

#include "rankaudit/inference.hpp"

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "rankaudit/random.hpp"

namespace {

using namespace rankaudit;

MomentSpec spec(std::size_t a, std::string hi = "A", std::string lo = "B") {
  return {a, a + 1, PairCondition{std::move(hi), std::move(lo)}, {}, {}};
}

// Every query matched.
MomentEstimate all_matched(std::vector<double> c, std::size_t a = 1) {
  std::vector<QueryRole> roles(c.size(), QueryRole::Matched);
  return estimate_from_contributions(spec(a), std::move(c), std::move(roles));
}

std::vector<double> normal_sample(std::uint64_t key, std::size_t n, double mean, double sd) {
  random::Stream s(key, 0);
  std::vector<double> v(n);
  for (double& x : v) x = mean + sd * s.normal();
  return v;
}

// Reference values below come from scipy.stats.norm.
TEST(Normal, CdfAndQuantile) {
  EXPECT_NEAR(normal_cdf(1.7320508075688774), 0.9583677416682248, 1e-14);
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
  EXPECT_NEAR(normal_quantile(0.05), -1.6448536269514729, 1e-14);
}

TEST(Pointwise, HandExamplePositive) {
  const PointwiseResult r = pointwise_test(all_matched({2, 0, 2, 0}));
  ASSERT_TRUE(r.defined);
  EXPECT_NEAR(r.t_stat, 1.7320508075688774, 1e-12);
  EXPECT_NEAR(r.p_value, 0.9583677416682248, 1e-12);
  EXPECT_NEAR(r.ci_lower, 1.0 - 1.959963984540054 / std::sqrt(3.0), 1e-12);
}

TEST(Pointwise, HandExampleNegative) {
  const PointwiseResult r = pointwise_test(all_matched({-1, -3, -2, -2}));
  EXPECT_NEAR(r.t_stat, -4.898979485566356, 1e-12);
  EXPECT_NEAR(r.p_value, 4.816785043215482e-07, 1e-18);
  EXPECT_NEAR(r.ci_lower, -2.800151946059218, 1e-12);
}

TEST(Pointwise, DegenerateCases) {
  EXPECT_FALSE(pointwise_test(all_matched({1.0})).defined);
  EXPECT_DOUBLE_EQ(pointwise_test(all_matched({1, 1, 1})).p_value, 1.0);
  EXPECT_DOUBLE_EQ(pointwise_test(all_matched({-1, -1})).p_value, 0.0);
  EXPECT_DOUBLE_EQ(pointwise_test(all_matched({0, 0})).p_value, 0.5);
}

JointOptions opts(std::uint64_t seed = 1, std::size_t min_n = 30) {
  JointOptions o;
  o.seed = seed;
  o.min_n = min_n;
  return o;
}

TEST(JointLF, StronglyViolatedRejects) {
  std::vector<MomentEstimate> e{all_matched(normal_sample(1, 100, -0.8, 1.0), 1),
                                all_matched(normal_sample(2, 100, -0.8, 1.0), 2)};
  const JointResult r = joint_test_lf(e, opts());
  EXPECT_GT(r.T_stat, 5.0);
  EXPECT_LT(r.p_value, 0.001);
  EXPECT_TRUE(r.reject);
  EXPECT_EQ(r.K, 2u);
}

TEST(JointLF, StronglySlackDoesNotReject) {
  std::vector<MomentEstimate> e{all_matched(normal_sample(3, 100, 0.8, 1.0), 1),
                                all_matched(normal_sample(4, 100, 0.8, 1.0), 2)};
  const JointResult r = joint_test_lf(e, opts());
  EXPECT_LT(r.T_stat, -5.0);
  EXPECT_GT(r.p_value, 0.99);
  EXPECT_FALSE(r.reject);
}

TEST(JointLF, SingleMomentMatchesPointwise) {
  for (double shift : {-0.15, -0.05, 0.0, 0.1}) {
    const MomentEstimate e = all_matched(normal_sample(5, 200, shift, 1.0));
    const double p_point = pointwise_test(e).p_value;
    const JointResult r = joint_test_lf(std::vector<MomentEstimate>{e}, opts(9));
    const double mc_se = std::sqrt(p_point * (1.0 - p_point) / static_cast<double>(r.mc_reps));
    EXPECT_NEAR(r.p_value, p_point, 2.0 * mc_se + 1.0 / (r.mc_reps + 1.0));
    EXPECT_NEAR(r.critical_values.at(0.05), 1.6448536269514729, 0.05);
  }
}

// Moments on disjoint query sets are uncorrelated; the max of three
// independent normals has c_alpha = Phi^-1((1 - alpha)^(1/3)).
TEST(JointLF, IndependentCriticalValues) {
  const std::size_t n = 300;
  std::vector<MomentEstimate> e;
  for (std::size_t j = 0; j < 3; ++j) {
    std::vector<double> c(3 * n, 0.0);
    std::vector<QueryRole> roles(3 * n, QueryRole::Excluded);
    const auto x = normal_sample(10 + j, n, 0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      c[j * n + i] = x[i];
      roles[j * n + i] = QueryRole::Matched;
    }
    e.push_back(estimate_from_contributions(spec(j + 1), c, roles));
  }
  const JointResult r = joint_test_lf(e, opts(4));
  EXPECT_NEAR(r.critical_values.at(0.05), 2.121201429680507, 0.05);
  EXPECT_NEAR(r.critical_values.at(0.01), 2.7119428130006376, 0.1);
  EXPECT_NEAR(r.critical_values.at(0.10), 1.8182807674634986, 0.05);
}

TEST(JointLF, PerfectlyCorrelatedBehavesLikeOne) {
  const auto x = normal_sample(20, 200, 0.0, 1.0);
  std::vector<MomentEstimate> e{all_matched(x, 1), all_matched(x, 2), all_matched(x, 3)};
  const JointResult r = joint_test_lf(e, opts(4));
  EXPECT_NEAR(r.critical_values.at(0.05), 1.6448536269514729, 0.05);
}

TEST(JointLF, ShiftingDownLowersPValue) {
  const auto base = normal_sample(30, 150, 0.0, 1.0);
  const auto other = normal_sample(31, 150, 0.05, 1.0);
  double last_p = 2.0;
  double last_t = -1e300;
  for (double shift : {0.2, 0.1, 0.0, -0.1, -0.2}) {
    std::vector<double> moved = base;
    for (double& v : moved) v += shift;
    std::vector<MomentEstimate> e{all_matched(moved, 1), all_matched(other, 2)};
    const JointResult r = joint_test_lf(e, opts(6));
    EXPECT_GE(r.T_stat, last_t);
    EXPECT_LE(r.p_value, last_p);
    last_t = r.T_stat;
    last_p = r.p_value;
  }
}

TEST(JointLF, ScaleInvariantBitForBit) {
  const auto a = normal_sample(40, 120, -0.05, 1.0);
  const auto b = normal_sample(41, 120, 0.02, 2.0);
  auto scaled = [](std::vector<double> v) {
    for (double& x : v) x *= 4.0;
    return v;
  };
  std::vector<MomentEstimate> e1{all_matched(a, 1), all_matched(b, 2)};
  std::vector<MomentEstimate> e4{all_matched(scaled(a), 1), all_matched(scaled(b), 2)};
  const JointResult r1 = joint_test_lf(e1, opts(8));
  const JointResult r4 = joint_test_lf(e4, opts(8));
  EXPECT_EQ(r1.T_stat, r4.T_stat);
  EXPECT_EQ(r1.p_value, r4.p_value);
  EXPECT_EQ(r1.critical_values, r4.critical_values);
}

TEST(JointLF, DeterministicGivenSeed) {
  std::vector<MomentEstimate> e{all_matched(normal_sample(50, 100, 0.0, 1.0), 1),
                                all_matched(normal_sample(51, 100, 0.0, 1.0), 2)};
  const JointResult a = joint_test_lf(e, opts(77));
  const JointResult b = joint_test_lf(e, opts(77));
  const JointResult c = joint_test_lf(e, opts(78));
  EXPECT_EQ(a.p_value, b.p_value);
  EXPECT_EQ(a.critical_values, b.critical_values);
  EXPECT_NE(a.critical_values, c.critical_values);
}

TEST(JointLF, ReportsRequestedAlpha) {
  std::vector<MomentEstimate> e{all_matched(normal_sample(60, 100, 0.0, 1.0))};
  JointOptions o = opts();
  o.alpha = 0.2;
  const JointResult r = joint_test_lf(e, o);
  EXPECT_EQ(r.critical_values.size(), 4u);
  EXPECT_TRUE(r.critical_values.contains(0.2));
  EXPECT_EQ(r.reject, r.T_stat > r.critical_values.at(0.2));
}

TEST(Selection, FiltersSmallAndDegenerateMoments) {
  std::vector<MomentEstimate> e{all_matched(normal_sample(70, 10, 0.0, 1.0), 1),
                                all_matched(std::vector<double>(50, 1.0), 2),
                                all_matched(normal_sample(71, 50, 0.0, 1.0), 3)};
  const JointResult r = joint_test_lf(e, opts());
  EXPECT_EQ(r.moments, (std::vector<std::size_t>{2}));
  EXPECT_EQ(r.warnings.size(), 2u);
  const std::vector<MomentEstimate> tiny{e[0]};
  EXPECT_THROW(joint_test_lf(tiny, opts()), NoTestableMoments);
  EXPECT_THROW(joint_test_bonferroni(tiny, opts()), NoTestableMoments);
}

TEST(Bonferroni, MultipliesMinimumPValue) {
  std::vector<MomentEstimate> e{all_matched(normal_sample(80, 100, -0.2, 1.0), 1),
                                all_matched(normal_sample(81, 100, 0.0, 1.0), 2)};
  const JointResult r = joint_test_bonferroni(e, opts());
  const double p1 = pointwise_test(e[0]).p_value;
  const double p2 = pointwise_test(e[1]).p_value;
  EXPECT_DOUBLE_EQ(r.p_value, std::min(1.0, 2.0 * std::min(p1, p2)));
  EXPECT_NEAR(r.critical_values.at(0.05), -normal_quantile(0.025), 1e-14);
}

// Four moments whose smallest pointwise p is 0.01: K * p = 0.04.
TEST(Bonferroni, HandValueAndClamp) {
  // Contributions (m - 1, m + 1) have se = 1, so t = m.
  const double t = normal_quantile(0.01);
  std::vector<MomentEstimate> e{all_matched({t - 1.0, t + 1.0}, 1), all_matched({1.0, 3.0}, 2),
                                all_matched({2.0, 4.0}, 3), all_matched({5.0, 7.0}, 4)};
  const JointResult r = joint_test_bonferroni(e, opts(1, 2));
  EXPECT_NEAR(r.p_value, 0.04, 1e-12);
  EXPECT_TRUE(r.reject);

  std::vector<MomentEstimate> slack{all_matched({1.0, 3.0}, 1), all_matched({2.0, 4.0}, 2)};
  EXPECT_DOUBLE_EQ(joint_test_bonferroni(slack, opts(1, 2)).p_value, 1.0);
}

TEST(Subsets, LabelsAndBuckets) {
  EXPECT_EQ(subset_label("F", "M"), "FM");
  EXPECT_EQ(subset_label("women", "men"), "women>men");
  std::vector<MomentEstimate> e;
  for (const auto& [hi, lo] : std::vector<std::pair<std::string, std::string>>{
           {"A", "B"}, {"B", "A"}, {"A", "B"}, {"A", "A"}}) {
    MomentEstimate m = all_matched(normal_sample(e.size() + 90, 60, 0.0, 1.0), e.size() + 1);
    m.spec.conditioning = PairCondition{hi, lo};
    e.push_back(m);
  }
  e[3] = all_matched(normal_sample(99, 5, 0.0, 1.0), 4);
  e[3].spec.conditioning = PairCondition{"A", "A"};
  const SubsetTests s = subset_joint_tests(e, JointMethod::LeastFavorable, opts());
  ASSERT_EQ(s.results.size(), 3u);
  EXPECT_EQ(s.results[0].subset, "all");
  EXPECT_EQ(s.results[0].K, 3u);
  EXPECT_EQ(s.results[1].subset, "AB");
  EXPECT_EQ(s.results[1].moments, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(s.results[2].subset, "BA");
  ASSERT_EQ(s.warnings.size(), 1u);
  EXPECT_NE(s.warnings[0].find("AA"), std::string::npos);
}

}  // namespace
