/*
   Copyright 2026 The AMT Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "amt/baselines.hpp"
#include "amt/sample_source.hpp"
#include "oracles.hpp"

namespace amt {
namespace {

TEST(BernoulliStream, DegenerateProbabilities)
{
    auto zeros = bernoulli_stream(0.0, 500, {1, 0});
    for (auto b : zeros.next(500)) {
        ASSERT_EQ(b, 0);
    }
    auto ones = bernoulli_stream(1.0, 500, {1, 0});
    for (auto b : ones.next(500)) {
        ASSERT_EQ(b, 1);
    }
    EXPECT_EQ(ones.successes(), 500u);
    EXPECT_TRUE(ones.exhausted());
}

TEST(BernoulliStream, FairCoinFraction)
{
    auto s = bernoulli_stream(0.5, 100000, {77, 3});
    const double frac = static_cast<double>(s.next_successes(100000)) / 100000.0;
    // Exact binomial 4 sigma band is ±0.0063, tighter than the required ±0.01.
    EXPECT_NEAR(frac, 0.5, 4.0 * std::sqrt(0.25 / 100000.0));
}

TEST(BernoulliStream, RejectsInvalidProbability)
{
    EXPECT_THROW(bernoulli_stream(-0.1, 10, {}), std::invalid_argument);
    EXPECT_THROW(bernoulli_stream(1.5, 10, {}), std::invalid_argument);
    EXPECT_THROW(bernoulli_stream(std::nan(""), 10, {}), std::invalid_argument);
    EXPECT_THROW(bernoulli_stream(0.5, 0, {}), std::invalid_argument);
}

TEST(SampleStream, CapacityIsEnforced)
{
    auto s = bernoulli_stream(0.3, 10, {1, 1});
    s.next(7);
    EXPECT_EQ(s.consumed(), 7u);
    EXPECT_LE(s.successes(), s.consumed());
    EXPECT_THROW(s.next(4), std::out_of_range);
    EXPECT_THROW(s.next_successes(4), std::out_of_range);
    s.next(3);
    EXPECT_TRUE(s.exhausted());
}

// Property: any batch split reproduces the same prefix, for both source kinds.
TEST(SampleStream, PrefixCouplingUnderArbitrarySplits)
{
    auto arm = make_permutation_arm({0, 1, 1, 0, 2, 1, 0, 2, 1, 1}, {1, 0, 1, 0, 1, 1, 0, 0, 1, 0},
                                    StatisticKind::chi_squared);
    const std::uint64_t n = 400;
    std::vector<SampleStream> prototypes{bernoulli_stream(0.37, n, {5, 2}), permutation_stream(arm, n, {5, 2})};
    auto splitter = derive_substream({99, 0, StreamPurpose::data_generation});
    for (const auto& proto : prototypes) {
        auto whole = proto;
        const auto reference = whole.next(n);
        for (int trial = 0; trial < 20; ++trial) {
            auto s = proto;
            std::vector<std::uint8_t> bits;
            while (!s.exhausted()) {
                const auto k = std::min<std::uint64_t>(s.remaining(), 1 + splitter.bounded(60));
                if (splitter.bounded(2) == 0) {
                    const auto part = s.next(k);
                    bits.insert(bits.end(), part.begin(), part.end());
                } else {
                    // Count-only path must consume the same bits.
                    const auto before = bits.size();
                    const auto ones = s.next_successes(k);
                    const auto sum = std::accumulate(reference.begin() + before, reference.begin() + before + k, 0u);
                    ASSERT_EQ(ones, sum);
                    bits.insert(bits.end(), reference.begin() + before, reference.begin() + before + k);
                }
            }
            ASSERT_EQ(bits, reference);
            ASSERT_EQ(s.successes(), static_cast<std::uint64_t>(std::accumulate(reference.begin(), reference.end(), 0u)));
        }
    }
}

TEST(PearsonCorrelation, Examples)
{
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{3, 2, 1};
    EXPECT_NEAR(pearson_correlation(a, a), 1.0, 1e-15);
    EXPECT_NEAR(pearson_correlation(a, b), -1.0, 1e-15);
    EXPECT_NEAR(pearson_correlation(std::vector<double>{1, -1, 1, -1}, std::vector<double>{1, 1, -1, -1}), 0.0, 1e-15);
}

TEST(PearsonCorrelation, ZeroVarianceIsZero)
{
    EXPECT_EQ(pearson_correlation(std::vector<double>{1, 2, 3}, std::vector<double>{4, 4, 4}), 0.0);
}

TEST(PearsonCorrelation, Errors)
{
    EXPECT_THROW(pearson_correlation(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), std::invalid_argument);
    EXPECT_THROW(pearson_correlation(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

std::pair<std::vector<int>, std::vector<int>> table_2x2(int a, int b, int c, int d)
{
    std::vector<int> x, y;
    auto push = [&](int xi, int yi, int count) {
        for (int i = 0; i < count; ++i) {
            x.push_back(xi);
            y.push_back(yi);
        }
    };
    push(0, 0, a);
    push(0, 1, b);
    push(1, 0, c);
    push(1, 1, d);
    return {x, y};
}

TEST(ChiSquared, Examples)
{
    {
        const auto [x, y] = table_2x2(10, 10, 10, 10);
        EXPECT_NEAR(chi_squared_statistic(x, y), 0.0, 1e-12);
    }
    {
        const auto [x, y] = table_2x2(20, 10, 10, 20);
        // 60·300²/810000
        EXPECT_NEAR(chi_squared_statistic(x, y), 20.0 / 3.0, 1e-12);
        EXPECT_NEAR(chi_squared_statistic(x, y), oracle::chi2_2x2(20, 10, 10, 20), 1e-12);
    }
    {
        const std::vector<std::string> x{"AA", "AG", "GG", "AG"};
        const std::vector<std::string> y{"case", "case", "case", "case"};
        EXPECT_EQ(chi_squared_statistic(x, y), 0.0);
    }
}

TEST(ChiSquared, MatchesShortcutOnRandomTables)
{
    auto rng = derive_substream({3, 0, StreamPurpose::data_generation});
    for (int t = 0; t < 200; ++t) {
        const int a = static_cast<int>(rng.bounded(30)), b = static_cast<int>(rng.bounded(30));
        const int c = static_cast<int>(rng.bounded(30)), d = static_cast<int>(rng.bounded(30)) + 1;
        const auto [x, y] = table_2x2(a, b, c, d);
        EXPECT_NEAR(chi_squared_statistic(x, y), oracle::chi2_2x2(a, b, c, d), 1e-9);
    }
}

TEST(ChiSquared, LengthMismatch)
{
    EXPECT_THROW(chi_squared_statistic(std::vector<int>{1, 2}, std::vector<int>{1}), std::invalid_argument);
}

TEST(PermutationArm, ObservedStatisticIsExact)
{
    const std::vector<double> x{0, 1, 2, 1, 0, 2, 1, 1};
    const std::vector<double> y{1, 0, 1, 1, 0, 0, 1, 0};
    const auto chi = make_permutation_arm(x, y, StatisticKind::chi_squared);
    EXPECT_EQ(chi.observed_statistic, chi_squared_statistic(x, y));
    const auto rho = make_permutation_arm(x, y, StatisticKind::pearson_correlation);
    EXPECT_EQ(rho.observed_statistic, pearson_correlation(x, y));
    EXPECT_THROW(make_permutation_arm({1, 2}, {1}, StatisticKind::chi_squared), std::invalid_argument);
}

TEST(PermutationStream, ConstantResponseGivesAllOnes)
{
    for (auto kind : {StatisticKind::chi_squared, StatisticKind::pearson_correlation}) {
        auto arm = make_permutation_arm({0, 1, 2, 1, 0, 2}, {1, 1, 1, 1, 1, 1}, kind);
        auto s = permutation_stream(arm, 300, {1, 0});
        EXPECT_EQ(s.next_successes(300), 300u);
    }
}

TEST(PermutationStream, ConstantInputGivesAllOnes)
{
    for (auto kind : {StatisticKind::chi_squared, StatisticKind::pearson_correlation}) {
        auto arm = make_permutation_arm({4, 4, 4, 4, 4, 4}, {1, 0, 1, 0, 0, 1}, kind);
        auto s = permutation_stream(arm, 300, {1, 0});
        EXPECT_EQ(s.next_successes(300), 300u);
    }
}

TEST(PermutationStream, MatchesExhaustiveEnumeration)
{
    const std::vector<int> x{0, 0, 0, 1, 1, 1};
    const std::vector<int> y{0, 0, 1, 1, 1, 1};
    const double exact = oracle::exact_permutation_p_value_2x2(x, y);
    auto arm = make_permutation_arm({0, 0, 0, 1, 1, 1}, {0, 0, 1, 1, 1, 1}, StatisticKind::chi_squared);
    const std::uint64_t n = 10000;
    auto s = permutation_stream(arm, n, {2024, 0});
    const double p = static_cast<double>(1 + s.next_successes(n)) / static_cast<double>(n + 1);
    EXPECT_NEAR(p, exact, 4.0 * std::sqrt(exact * (1 - exact) / static_cast<double>(n)));
}

TEST(PermutationStream, NullPValuesAreNotAntiConservative)
{
    // 1000 arms with independently generated x and y, so the response is
    // exchangeable. The fraction of fMC p-values <= 0.1 must not exceed 0.1
    // by more than 3 binomial standard deviations.
    const std::size_t arms = 1000;
    const std::uint64_t n = 199;
    std::size_t small = 0;
    for (std::size_t i = 0; i < arms; ++i) {
        auto gen = derive_substream({555, i, StreamPurpose::data_generation});
        std::vector<double> x(40), y(40);
        for (std::size_t r = 0; r < x.size(); ++r) {
            x[r] = static_cast<double>(gen.bounded(3));
            y[r] = static_cast<double>(gen.bounded(2));
        }
        const auto kind = i % 2 == 0 ? StatisticKind::chi_squared : StatisticKind::pearson_correlation;
        auto s = permutation_stream(make_permutation_arm(x, y, kind), n, {555, i});
        const double p = static_cast<double>(1 + s.next_successes(n)) / static_cast<double>(n + 1);
        small += p <= 0.1 ? 1 : 0;
    }
    const double frac = static_cast<double>(small) / static_cast<double>(arms);
    EXPECT_LE(frac, 0.1 + 3.0 * std::sqrt(0.1 * 0.9 / static_cast<double>(arms)));
}

TEST(PermutationStream, SameSeedSameBits)
{
    auto arm = make_permutation_arm({1.5, 2.0, 0.1, 3.3, 2.2}, {0, 1, 0, 1, 1}, StatisticKind::pearson_correlation);
    auto a = permutation_stream(arm, 200, {8, 1});
    auto b = permutation_stream(arm, 200, {8, 1});
    auto c = permutation_stream(arm, 200, {8, 2});
    const auto bits = a.next(200);
    EXPECT_EQ(bits, b.next(200));
    EXPECT_NE(bits, c.next(200));
}

} // namespace
} // namespace amt
