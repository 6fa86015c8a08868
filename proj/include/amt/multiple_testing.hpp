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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace amt {

/// r·α/m. Every threshold comparison in the library goes through this so that
/// BH and the adaptive engine agree to the last bit.
inline double bh_threshold(std::size_t rank, double alpha, std::size_t m) noexcept
{
    return static_cast<double>(rank) * alpha / static_cast<double>(m);
}

struct BhOutcome {
    std::size_t critical_rank = 0;
    double threshold = 0.0;
    std::vector<std::size_t> rejected; // ascending indices
};

/// Benjamini-Hochberg step-up. Rejects {i : p_i <= r*·α/m} where r* is the
/// largest r with p_(r) <= r·α/m, or nothing if no such r exists.
inline BhOutcome bh_procedure(std::span<const double> p_values, double alpha)
{
    const std::size_t m = p_values.size();
    if (m == 0) {
        throw std::invalid_argument("bh_procedure: no p-values");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("bh_procedure: alpha must lie in (0, 1)");
    }
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("bh_procedure: p-value outside [0, 1]");
        }
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return p_values[a] < p_values[b] || (p_values[a] == p_values[b] && a < b);
    });

    BhOutcome out;
    for (std::size_t r = m; r >= 1; --r) {
        if (p_values[order[r - 1]] <= bh_threshold(r, alpha, m)) {
            out.critical_rank = r;
            break;
        }
    }
    out.threshold = bh_threshold(out.critical_rank, alpha, m);
    if (out.critical_rank > 0) {
        for (std::size_t i = 0; i < m; ++i) {
            if (p_values[i] <= out.threshold) {
                out.rejected.push_back(i);
            }
        }
    }
    return out;
}

inline BhOutcome bh_procedure(const std::vector<double>& p_values, double alpha)
{
    return bh_procedure(std::span<const double>(p_values), alpha);
}

/// False discovery proportion; 0 for an empty rejection set.
inline double fdp(std::span<const std::size_t> rejected, const std::vector<bool>& null_mask)
{
    std::size_t false_discoveries = 0;
    for (auto i : rejected) {
        if (i >= null_mask.size()) {
            throw std::out_of_range("fdp: rejection index out of range");
        }
        false_discoveries += null_mask[i] ? 1 : 0;
    }
    return static_cast<double>(false_discoveries) / static_cast<double>(std::max<std::size_t>(rejected.size(), 1));
}

/// sMC stopping parameter s = round((r_guess/m)·α·n), at least 1. Matches the
/// sMC accuracy near the BH threshold to that of fMC.
inline std::uint64_t smc_recommended_s(double alpha, std::uint64_t n, std::uint64_t m, std::uint64_t r_guess)
{
    if (m == 0 || r_guess < 1 || r_guess > m) {
        throw std::invalid_argument("smc_recommended_s: r_guess must lie in [1, m]");
    }
    const double s = std::round(static_cast<double>(r_guess) / static_cast<double>(m) * alpha * static_cast<double>(n));
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(s));
}

} // namespace amt
