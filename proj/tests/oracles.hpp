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

// Independent reference computations used only by the tests. None of these
// share code paths with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

namespace amt::oracle {

/// Φ(x) = 1/2 + φ(x)·Σ x^(2k+1)/(2k+1)!! evaluated in long double. The series
/// has only positive terms for x > 0, so it is accurate across [-8, 8].
inline long double normal_cdf_series(long double x)
{
    const long double ax = std::fabs(x);
    long double term = ax;
    long double sum = ax;
    for (int k = 1; k < 2000; ++k) {
        term *= ax * ax / static_cast<long double>(2 * k + 1);
        sum += term;
        if (term < sum * 1e-21L) {
            break;
        }
    }
    const long double pdf = std::exp(-0.5L * ax * ax) / std::sqrt(2.0L * 3.14159265358979323846264338327950288L);
    const long double upper_half = pdf * sum;
    return x >= 0 ? 0.5L + upper_half : 0.5L - upper_half;
}

/// Critical rank by direct evaluation of r* = max{r : p_(r) <= rα/m}: for each
/// r, count p-values below rα/m (equivalently p_(r) <= rα/m). O(m²).
inline std::size_t bh_critical_rank_bruteforce(const std::vector<double>& p, double alpha)
{
    const std::size_t m = p.size();
    std::size_t best = 0;
    for (std::size_t r = 1; r <= m; ++r) {
        const double t = static_cast<double>(r) * alpha / static_cast<double>(m);
        std::size_t below = 0;
        for (double v : p) {
            below += v <= t ? 1 : 0;
        }
        if (below >= r) {
            best = r;
        }
    }
    return best;
}

inline std::vector<std::size_t> bh_rejections_bruteforce(const std::vector<double>& p, double alpha)
{
    const auto r = bh_critical_rank_bruteforce(p, alpha);
    std::vector<std::size_t> out;
    if (r == 0) {
        return out;
    }
    const double t = static_cast<double>(r) * alpha / static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= t) {
            out.push_back(i);
        }
    }
    return out;
}

/// Chi-squared of a 2x2 table from integer cell counts via the shortcut
/// N(ad-bc)²/((a+b)(c+d)(a+c)(b+d)); 0 if any margin is empty.
inline double chi2_2x2(long a, long b, long c, long d)
{
    const long double n = a + b + c + d;
    const long double den = static_cast<long double>(a + b) * (c + d) * (a + c) * (b + d);
    if (den == 0) {
        return 0.0;
    }
    const long double diff = static_cast<long double>(a) * d - static_cast<long double>(b) * c;
    return static_cast<double>(n * diff * diff / den);
}

/// Exact permutation p-value for binary x, y by enumerating every ordering of
/// y with std::next_permutation over position indices.
inline double exact_permutation_p_value_2x2(const std::vector<int>& x, const std::vector<int>& y)
{
    auto stat = [&](const std::vector<int>& yy) {
        long a = 0, b = 0, c = 0, d = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] == 0 && yy[i] == 0) ++a;
            else if (x[i] == 0) ++b;
            else if (yy[i] == 0) ++c;
            else ++d;
        }
        return chi2_2x2(a, b, c, d);
    };
    const double observed = stat(y);
    std::vector<std::size_t> idx(y.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::size_t total = 0, extreme = 0;
    do {
        std::vector<int> yy(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            yy[i] = y[idx[i]];
        }
        ++total;
        extreme += stat(yy) >= observed - 1e-12 ? 1 : 0;
    } while (std::next_permutation(idx.begin(), idx.end()));
    return static_cast<double>(extreme) / static_cast<double>(total);
}

} // namespace amt::oracle
