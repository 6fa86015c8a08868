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
#include <span>
#include <stdexcept>
#include <vector>

#include "amt/confidence.hpp"
#include "amt/multiple_testing.hpp"
#include "amt/parallel.hpp"
#include "amt/sample_source.hpp"

namespace amt {

struct AmtConfig {
    double alpha = 0.1;      // nominal FDR
    double delta = 0.01;     // probability of not recovering the fMC result
    std::uint64_t n = 10000; // fMC samples per hypothesis
    std::uint64_t h1 = 100;  // first batch size
    double gamma = 1.1;      // batch growth factor

    void validate() const
    {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw std::invalid_argument("AmtConfig: alpha must lie in (0, 1)");
        }
        if (!(delta > 0.0 && delta < 1.0)) {
            throw std::invalid_argument("AmtConfig: delta must lie in (0, 1)");
        }
        if (h1 < 1 || h1 > n) {
            throw std::invalid_argument("AmtConfig: need 1 <= h1 <= n");
        }
        if (!(gamma > 1.0) || !std::isfinite(gamma)) {
            throw std::invalid_argument("AmtConfig: gamma must be finite and > 1");
        }
    }
};

struct BatchSchedule {
    std::vector<std::uint64_t> sizes;

    std::size_t batch_count() const noexcept { return sizes.size(); }
};

/// h_l = floor(h1·γ^(l-1)), the last batch truncated so that the sizes sum to n.
inline BatchSchedule batch_schedule(std::uint64_t n, std::uint64_t h1, double gamma)
{
    if (h1 < 1 || h1 > n) {
        throw std::invalid_argument("batch_schedule: need 1 <= h1 <= n");
    }
    if (!(gamma > 1.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("batch_schedule: gamma must be finite and > 1");
    }
    BatchSchedule schedule;
    std::uint64_t total = 0;
    for (std::uint64_t l = 0; total < n; ++l) {
        // The 1e-9 nudge keeps exact products such as 100·1.1² = 121 from
        // flooring to 120 through representation error.
        const double raw = std::floor(static_cast<double>(h1) * std::pow(gamma, static_cast<double>(l)) + 1e-9);
        std::uint64_t size = raw >= static_cast<double>(n) ? n : std::max<std::uint64_t>(1, static_cast<std::uint64_t>(raw));
        size = std::min(size, n - total);
        schedule.sizes.push_back(size);
        total += size;
    }
    return schedule;
}

struct CriticalRankUpdate {
    std::size_t r_hat = 0;
    std::vector<std::size_t> certain_greater;
};

/// Largest r <= r_hat with r = m - |{i : p_lb_i > r·α/m}|, found as the fixed
/// point of r <- m - |C_g(r)|. Equivalent to lowering r one step at a time
/// since |C_g(r)| only grows as r falls.
inline CriticalRankUpdate update_critical_rank(std::span<const double> lower_bounds, double alpha, std::size_t r_hat)
{
    const std::size_t m = lower_bounds.size();
    if (r_hat > m) {
        throw std::invalid_argument("update_critical_rank: r_hat exceeds m");
    }
    std::vector<double> sorted(lower_bounds.begin(), lower_bounds.end());
    std::sort(sorted.begin(), sorted.end());
    auto count_greater = [&](std::size_t r) {
        const double tau = bh_threshold(r, alpha, m);
        return static_cast<std::size_t>(sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), tau));
    };
    std::size_t r = r_hat;
    while (true) {
        const std::size_t next = m - count_greater(r);
        if (next >= r) {
            break;
        }
        r = next;
    }
    CriticalRankUpdate out;
    out.r_hat = r;
    const double tau = bh_threshold(r, alpha, m);
    for (std::size_t i = 0; i < m; ++i) {
        if (lower_bounds[i] > tau) {
            out.certain_greater.push_back(i);
        }
    }
    return out;
}

enum class HypothesisStatus { uncertain, certain_greater, certain_less };

struct HypothesisState {
    CbState cb;
    HypothesisStatus status = HypothesisStatus::uncertain;
    std::size_t batches_taken = 0;

    std::uint64_t samples_used() const noexcept { return cb.k; }
};

struct RoundRecord {
    std::size_t round = 0;
    std::size_t sampled = 0;         // |U| entering the round
    std::uint64_t samples = 0;       // MC samples drawn this round
    std::size_t r_hat = 0;           // after the update step
    double tau_hat = 0.0;
    std::size_t certain_greater = 0;
    std::size_t certain_less = 0;
    std::size_t uncertain = 0;
};

struct AmtResult {
    std::vector<std::size_t> discoveries; // final C_l, ascending
    std::size_t r_hat = 0;
    double tau_hat = 0.0;
    std::vector<std::uint64_t> per_hypothesis_samples;
    std::uint64_t total_samples = 0;
    std::size_t rounds = 0;
    std::size_t batch_count = 0;
    double per_side_error = 0.0;
    std::vector<RoundRecord> log;
    std::vector<HypothesisState> hypotheses;
};

/// Adaptive MC multiple testing. Samples every uncertain hypothesis by its next
/// scheduled batch, tightens its confidence bounds at level δ/(2mL), lowers
/// the critical-rank estimate, and reclassifies all hypotheses against
/// τ̂ = r̂α/m, until none is uncertain. The per-hypothesis work in a round
/// may run on `threads` workers; the result does not depend on that count.
inline AmtResult run_amt(std::vector<SampleStream> streams, const AmtConfig& config, unsigned threads = 1)
{
    config.validate();
    const std::size_t m = streams.size();
    if (m == 0) {
        throw std::invalid_argument("run_amt: no hypotheses");
    }
    for (const auto& s : streams) {
        if (s.capacity() != config.n || s.consumed() != 0) {
            throw std::invalid_argument("run_amt: every stream must be fresh with capacity n");
        }
    }

    const auto schedule = batch_schedule(config.n, config.h1, config.gamma);
    const std::size_t batches = schedule.batch_count();
    const double per_side_error = config.delta / (2.0 * static_cast<double>(m) * static_cast<double>(batches));

    AmtResult result;
    result.batch_count = batches;
    result.per_side_error = per_side_error;
    result.hypotheses.assign(m, HypothesisState{CbState::initial(per_side_error), HypothesisStatus::uncertain, 0});
    auto& states = result.hypotheses;

    std::size_t r_hat = m;
    double tau_hat = config.alpha;
    std::vector<std::size_t> uncertain(m);
    for (std::size_t i = 0; i < m; ++i) {
        uncertain[i] = i;
    }
    std::vector<double> lower(m);

    while (!uncertain.empty() && r_hat > 0) {
        RoundRecord record;
        record.round = result.rounds + 1;
        record.sampled = uncertain.size();

        std::vector<std::uint64_t> drawn(uncertain.size(), 0);
        parallel_for(uncertain.size(), threads, [&](std::size_t slot) {
            const std::size_t i = uncertain[slot];
            auto& st = states[i];
            // Exhausted hypotheses have zero-width bounds and never stay uncertain.
            const std::uint64_t h = schedule.sizes[st.batches_taken];
            const std::uint64_t ones = streams[i].next_successes(h);
            st.cb = cb_update_counts(st.cb, h, ones, config.n);
            ++st.batches_taken;
            drawn[slot] = h;
        });
        for (auto h : drawn) {
            record.samples += h;
        }

        for (std::size_t i = 0; i < m; ++i) {
            lower[i] = states[i].cb.p_lb;
        }
        r_hat = update_critical_rank(lower, config.alpha, r_hat).r_hat;
        tau_hat = bh_threshold(r_hat, config.alpha, m);

        uncertain.clear();
        for (std::size_t i = 0; i < m; ++i) {
            auto& st = states[i];
            if (st.cb.p_lb > tau_hat) {
                st.status = HypothesisStatus::certain_greater;
                ++record.certain_greater;
            } else if (st.cb.p_ub <= tau_hat) {
                st.status = HypothesisStatus::certain_less;
                ++record.certain_less;
            } else {
                st.status = HypothesisStatus::uncertain;
                uncertain.push_back(i);
            }
        }
        record.uncertain = uncertain.size();
        record.r_hat = r_hat;
        record.tau_hat = tau_hat;
        result.log.push_back(record);
        ++result.rounds;
    }

    result.r_hat = r_hat;
    result.tau_hat = tau_hat;
    result.per_hypothesis_samples.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        result.per_hypothesis_samples[i] = states[i].samples_used();
        result.total_samples += states[i].samples_used();
        if (r_hat > 0 && states[i].status == HypothesisStatus::certain_less) {
            result.discoveries.push_back(i);
        }
    }
    return result;
}

} // namespace amt
