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
#include <cstdint>
#include <span>
#include <stdexcept>

#include "amt/numerics.hpp"

namespace amt {

/// Floored empirical mean max(successes, 1)/k.
inline double empirical_mean(std::uint64_t successes, std::uint64_t k)
{
    if (k == 0) {
        throw std::invalid_argument("empirical_mean: k must be positive");
    }
    if (successes > k) {
        throw std::invalid_argument("empirical_mean: successes exceed k");
    }
    return static_cast<double>(std::max<std::uint64_t>(successes, 1)) / static_cast<double>(k);
}

struct Bounds {
    double lower = 0.0;
    double upper = 1.0;
};

/// z-value for a one-sided error level; kept separate so callers that reuse
/// one error level across many updates can evaluate the quantile once.
inline double agresti_coull_z(double per_side_error)
{
    if (!(per_side_error > 0.0 && per_side_error < 0.5)) {
        throw std::invalid_argument("agresti_coull: per-side error must lie in (0, 0.5)");
    }
    return -std_normal_quantile(per_side_error);
}

inline Bounds agresti_coull_bounds_z(std::uint64_t successes, std::uint64_t k, double z)
{
    if (k == 0) {
        throw std::invalid_argument("agresti_coull: k must be positive");
    }
    if (successes > k) {
        throw std::invalid_argument("agresti_coull: successes exceed k");
    }
    const double z2 = z * z;
    const double s_eff = static_cast<double>(std::max<std::uint64_t>(successes, 1));
    const double n_tilde = static_cast<double>(k) + z2;
    const double p_tilde = (s_eff + 0.5 * z2) / n_tilde;
    const double half = z * std::sqrt(p_tilde * (1.0 - p_tilde) / n_tilde);
    return {std::max(0.0, p_tilde - half), std::min(1.0, p_tilde + half)};
}

/// Agresti-Coull interval at one-sided level `per_side_error`, centred on the
/// success count floored at one, clamped to [0, 1].
inline Bounds agresti_coull_bounds(std::uint64_t successes, std::uint64_t k, double per_side_error)
{
    return agresti_coull_bounds_z(successes, k, agresti_coull_z(per_side_error));
}

/// Confidence bounds on one hypothesis's fMC p-value.
struct CbState {
    std::uint64_t k = 0;
    std::uint64_t successes = 0;
    double per_side_error = 0.0;
    double z = 0.0;
    double p_lb = 0.0;
    double p_ub = 1.0;
    bool exhausted = false;

    static CbState initial(double per_side_error)
    {
        CbState s;
        s.per_side_error = per_side_error;
        s.z = agresti_coull_z(per_side_error);
        return s;
    }

    double fmc_p_value(std::uint64_t n) const
    {
        return static_cast<double>(1 + successes) / static_cast<double>(n + 1);
    }
};

/// Folds `new_successes` ones out of `new_count` fresh bits into the state.
/// At k == n the interval collapses to the exact fMC p-value.
inline CbState cb_update_counts(CbState state, std::uint64_t new_count, std::uint64_t new_successes, std::uint64_t n)
{
    if (new_successes > new_count) {
        throw std::invalid_argument("cb_update: more successes than bits");
    }
    if (state.k + new_count > n) {
        throw std::out_of_range("cb_update: capacity overflow");
    }
    if (new_count == 0) {
        return state;
    }
    state.k += new_count;
    state.successes += new_successes;
    if (state.k == n) {
        state.exhausted = true;
        state.p_lb = state.p_ub = state.fmc_p_value(n);
        return state;
    }
    const auto b = agresti_coull_bounds_z(state.successes, state.k, state.z);
    state.p_lb = b.lower;
    state.p_ub = b.upper;
    return state;
}

inline CbState cb_update(CbState state, std::span<const std::uint8_t> new_bits, std::uint64_t n)
{
    std::uint64_t ones = 0;
    for (auto b : new_bits) {
        ones += b != 0 ? 1 : 0;
    }
    return cb_update_counts(state, new_bits.size(), ones, n);
}

} // namespace amt
