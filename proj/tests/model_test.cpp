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

#include "rankaudit/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "rankaudit/random.hpp"

namespace {

using namespace rankaudit;

QueryRecord make_query(std::vector<double> y, std::vector<std::string> g = {}) {
  std::vector<Entry> entries;
  for (std::size_t i = 0; i < y.size(); ++i) {
    entries.push_back({g.empty() ? "A" : g[i], y[i], {}});
  }
  return QueryRecord("q", std::move(entries));
}

TEST(Weights, NdcgHandValues) {
  EXPECT_DOUBLE_EQ(ndcg_weight(1), 1.0);
  EXPECT_NEAR(ndcg_weight(2), 0.6309297535714575, 1e-15);
  EXPECT_DOUBLE_EQ(ndcg_weight(3), 0.5);
  EXPECT_THROW(ndcg_weight(0), std::domain_error);
}

TEST(Weights, DcgAndIdcgHandValues) {
  const auto w = WeightScheme::ndcg();
  const std::vector<double> ones{1, 1, 1};
  EXPECT_NEAR(dcg(ones, w), 2.1309297535714573, 1e-14);
  const std::vector<double> y{3, 1, 2};
  EXPECT_NEAR(idcg(y, w), 4.761859507142915, 1e-14);
  EXPECT_NEAR(objective_value(make_query(y), w), 3 + 1 * 0.6309297535714575 + 2 * 0.5, 1e-14);
}

TEST(Weights, SchemesAreStrictlyDecreasing) {
  for (const WeightScheme& w : {WeightScheme::ndcg(), WeightScheme::geometric(0.1),
                                WeightScheme::explicit_weights({5, 3, 2, 1})}) {
    const auto v = w.resolve(4);
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LT(v[i], v[i - 1]);
  }
  EXPECT_NEAR(WeightScheme::geometric(0.5).weight(2), 1.0 / 2.25, 1e-15);
}

TEST(Weights, RejectsInvalidSchemes) {
  EXPECT_THROW(WeightScheme::geometric(0.0), std::domain_error);
  EXPECT_THROW(WeightScheme::geometric(-0.2), std::domain_error);
  EXPECT_THROW(WeightScheme::explicit_weights({1, 1}), std::domain_error);
  EXPECT_THROW(WeightScheme::explicit_weights({1, -1}), std::domain_error);
  const auto w = WeightScheme::explicit_weights({2, 1});
  const std::vector<double> three{1, 1, 1};
  EXPECT_THROW(dcg(three, w), std::out_of_range);
}

TEST(PositionAdjust, ScalesByRank) {
  const QueryRecord q = make_query({1.0, 1.0, 1.0});
  const QueryRecord adj = position_adjust(q, 0.1);
  EXPECT_NEAR(adj.at_rank(3).outcome, 1.331, 1e-12);
  EXPECT_NEAR(position_adjust(make_query({1.5}), 1.0).at_rank(1).outcome, 3.0, 1e-15);
  EXPECT_EQ(position_adjust(q, 0.0), q);
  EXPECT_THROW(position_adjust(q, -1.0), std::domain_error);
}

TEST(NdcgNormalize, DividesByIdcgAndSkipsZero) {
  const auto w = WeightScheme::ndcg();
  const auto n = ndcg_normalize(make_query({3, 1, 2}), w);
  ASSERT_TRUE(n.has_value());
  EXPECT_NEAR(n->at_rank(1).outcome, 3.0 / 4.761859507142915, 1e-14);
  EXPECT_FALSE(ndcg_normalize(make_query({0, 0}), w).has_value());
  EXPECT_THROW(ndcg_normalize(make_query({1, -1}), w), std::domain_error);
}

TEST(QueryRecord, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(QueryRecord("q", {}), std::invalid_argument);
  EXPECT_THROW(make_query({1.0, std::nan("")}), std::invalid_argument);
}

TEST(OptimalRanking, HandExample) {
  const std::vector<double> mu{0.2, 0.9, 0.5};
  EXPECT_EQ(optimal_ranking(mu), (std::vector<std::size_t>{1, 2, 0}));
  const std::vector<double> tied{0.5, 0.7, 0.5};
  EXPECT_EQ(optimal_ranking(tied), (std::vector<std::size_t>{1, 0, 2}));
}

double objective_of_order(const std::vector<double>& mu, const std::vector<std::size_t>& order,
                          const WeightScheme& w) {
  double total = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) total += w.weight(r + 1) * mu[order[r]];
  return total;
}

// Random queries, J <= 6: exhaustive search never beats the sorted order,
// and any swap changes the objective by (w_a - w_b)(Y_a - Y_b).
TEST(OptimalRanking, MatchesExhaustiveSearchAndSwapIdentity) {
  const auto w = WeightScheme::ndcg();
  for (std::uint64_t q = 0; q < 300; ++q) {
    random::Stream s(random::derive_key(2024, q), 0);
    const std::size_t J = 1 + static_cast<std::size_t>(s.uniform() * 6);
    std::vector<double> mu(J);
    for (double& v : mu) v = s.uniform() < 0.2 ? 0.5 : s.uniform();  // some ties

    const auto sorted = optimal_ranking(mu);
    std::vector<std::size_t> perm(J);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    double best = -1e300;
    do {
      best = std::max(best, objective_of_order(mu, perm, w));
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(objective_of_order(mu, sorted, w), best, 1e-12);

    std::vector<double> y(J);
    for (std::size_t r = 0; r < J; ++r) y[r] = mu[sorted[r]];
    for (std::size_t a = 0; a < J; ++a) {
      for (std::size_t b = a + 1; b < J; ++b) {
        std::vector<double> swapped = y;
        std::swap(swapped[a], swapped[b]);
        const double delta = dcg(y, w) - dcg(swapped, w);
        const double expected = (w.weight(a + 1) - w.weight(b + 1)) * (y[a] - y[b]);
        EXPECT_NEAR(delta, expected, 1e-10);
        EXPECT_GE(delta, -1e-12);
      }
    }
  }
}

TEST(Dataset, AlphabetCodesAndMaxLen) {
  Dataset d({make_query({1, 0}, {"M", "F"}), make_query({1, 1, 0}, {"F", "F", "X"})});
  EXPECT_EQ(d.alphabet(), (std::vector<std::string>{"F", "M", "X"}));
  EXPECT_EQ(d.max_len(), 3u);
  EXPECT_EQ(d.codes(0), (std::vector<std::uint32_t>{1, 0}));
  EXPECT_EQ(d.codes(1), (std::vector<std::uint32_t>{0, 0, 2}));
  EXPECT_FALSE(d.group_code("Z").has_value());
}

}  // namespace
