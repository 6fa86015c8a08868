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
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "amt/confidence.hpp"
#include "amt/numerics.hpp"

namespace amt {
namespace {

TEST(EmpiricalMean, FlooredAtOneSuccess)
{
    EXPECT_DOUBLE_EQ(empirical_mean(0, 100), 0.01);
    EXPECT_DOUBLE_EQ(empirical_mean(5, 100), 0.05);
    EXPECT_DOUBLE_EQ(empirical_mean(100, 100), 1.0);
    EXPECT_THROW(empirical_mean(0, 0), std::invalid_argument);
    EXPECT_THROW(empirical_mean(3, 2), std::invalid_argument);
}

TEST(AgrestiCoull, ClosedFormValue)
{
    // Closed form evaluated at 40 digits with z = Φ⁻¹(0.975).
    const auto b = agresti_coull_bounds(5, 50, 0.025);
    EXPECT_NEAR(b.lower, 0.0391403454371507, 1e-12);
    EXPECT_NEAR(b.upper, 0.2179377338695363, 1e-12);
}

TEST(AgrestiCoull, SuccessFloorAndClamp)
{
    const auto zero = agresti_coull_bounds(0, 50, 0.025);
    const auto one = agresti_coull_bounds(1, 50, 0.025);
    EXPECT_EQ(zero.lower, one.lower);
    EXPECT_EQ(zero.upper, one.upper);
    EXPECT_EQ(one.lower, 0.0); // raw lower bound is negative

    const auto all = agresti_coull_bounds(50, 50, 0.025);
    EXPECT_EQ(all.upper, 1.0);
    EXPECT_LT(all.lower, 1.0);
    EXPECT_NEAR(all.lower, 0.9147838794220432, 1e-12);
}

TEST(AgrestiCoull, RejectsBadArguments)
{
    EXPECT_THROW(agresti_coull_bounds(1, 10, 0.0), std::invalid_argument);
    EXPECT_THROW(agresti_coull_bounds(1, 10, 0.5), std::invalid_argument);
    EXPECT_THROW(agresti_coull_bounds(1, 0, 0.1), std::invalid_argument);
    EXPECT_THROW(agresti_coull_bounds(11, 10, 0.1), std::invalid_argument);
}

TEST(AgrestiCoull, WidthShrinksWhenSampleDoubles)
{
    for (double error : {0.01, 1e-4, 1e-7}) {
        for (double ratio : {0.01, 0.05, 0.2, 0.5, 0.9}) {
            for (std::uint64_t k = 100; k <= 51200; k *= 2) {
                const auto s1 = static_cast<std::uint64_t>(std::round(ratio * static_cast<double>(k)));
                const auto s2 = static_cast<std::uint64_t>(std::round(ratio * static_cast<double>(2 * k)));
                const auto a = agresti_coull_bounds(s1, k, error);
                const auto b = agresti_coull_bounds(s2, 2 * k, error);
                EXPECT_GE((a.upper - a.lower) / (b.upper - b.lower), 1.3)
                    << "error=" << error << " ratio=" << ratio << " k=" << k;
            }
        }
    }
}

TEST(AgrestiCoull, BracketsEmpiricalMean)
{
    auto rng = derive_substream({17, 0, StreamPurpose::data_generation});
    for (int t = 0; t < 5000; ++t) {
        const std::uint64_t k = 1 + rng.bounded(5000);
        const std::uint64_t s = rng.bounded(k + 1);
        const double error = std::pow(10.0, -1.0 - 8.0 * rng.uniform());
        const auto b = agresti_coull_bounds(s, k, error);
        const double mean = empirical_mean(s, k);
        ASSERT_LE(0.0, b.lower);
        ASSERT_LE(b.lower, mean) << s << "/" << k;
        ASSERT_LE(mean, b.upper) << s << "/" << k;
        ASSERT_LE(b.upper, 1.0);
    }
}

TEST(CbUpdate, ExhaustionCollapsesToFmcValue)
{
    const std::uint64_t n = 200;
    auto st = CbState::initial(1e-4);
    st = cb_update_counts(st, n - 1, 17, n);
    EXPECT_FALSE(st.exhausted);
    EXPECT_LT(st.p_lb, st.p_ub);
    const std::vector<std::uint8_t> last{1};
    st = cb_update(st, last, n);
    EXPECT_TRUE(st.exhausted);
    EXPECT_EQ(st.p_lb, st.p_ub);
    EXPECT_DOUBLE_EQ(st.p_lb, 19.0 / 201.0);
}

TEST(CbUpdate, EmptyBatchIsIdentity)
{
    auto st = cb_update_counts(CbState::initial(0.01), 50, 3, 1000);
    const auto same = cb_update(st, std::vector<std::uint8_t>{}, 1000);
    EXPECT_EQ(same.k, st.k);
    EXPECT_EQ(same.successes, st.successes);
    EXPECT_EQ(same.p_lb, st.p_lb);
    EXPECT_EQ(same.p_ub, st.p_ub);
}

TEST(CbUpdate, MoreZerosLowersUpperBound)
{
    auto st = cb_update_counts(CbState::initial(0.001), 100, 0, 10000);
    const auto before = st.p_ub;
    st = cb_update(st, std::vector<std::uint8_t>(110, 0), 10000);
    EXPECT_EQ(st.k, 210u);
    EXPECT_LT(st.p_ub, before);
    // Direct recomputation.
    EXPECT_EQ(st.p_ub, agresti_coull_bounds(0, 210, 0.001).upper);
}

TEST(CbUpdate, OverflowRejected)
{
    auto st = cb_update_counts(CbState::initial(0.01), 90, 3, 100);
    EXPECT_THROW(cb_update_counts(st, 11, 0, 100), std::out_of_range);
    EXPECT_THROW(cb_update_counts(st, 2, 3, 100), std::invalid_argument);
}

TEST(CbUpdate, BoundsDependOnlyOnCounts)
{
    // Two different batch paths to the same (k, S) give identical bounds.
    auto a = CbState::initial(1e-5);
    a = cb_update_counts(a, 100, 4, 5000);
    a = cb_update_counts(a, 110, 1, 5000);
    auto b = cb_update_counts(CbState::initial(1e-5), 210, 5, 5000);
    EXPECT_EQ(a.p_lb, b.p_lb);
    EXPECT_EQ(a.p_ub, b.p_ub);
}

} // namespace
} // namespace amt
