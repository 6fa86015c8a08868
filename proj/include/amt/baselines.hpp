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

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "amt/multiple_testing.hpp"
#include "amt/parallel.hpp"
#include "amt/sample_source.hpp"

namespace amt {

/// (1 + Σ bits)/(n + 1) over a complete set of n bits.
inline double fmc_p_value(std::span<const std::uint8_t> bits, std::uint64_t n)
{
    if (bits.size() != n) {
        throw std::invalid_argument("fmc_p_value: expected exactly n bits");
    }
    std::uint64_t ones = 0;
    for (auto b : bits) {
        ones += b != 0 ? 1 : 0;
    }
    return static_cast<double>(1 + ones) / static_cast<double>(n + 1);
}

struct FmcResult {
    std::vector<double> p_values;
    std::vector<std::uint64_t> successes;
    BhOutcome bh;
    std::uint64_t total_samples = 0;
};

namespace detail {

inline std::uint64_t common_capacity(const std::vector<SampleStream>& streams, const char* who)
{
    if (streams.empty()) {
        throw std::invalid_argument(std::string(who) + ": no hypotheses");
    }
    const auto n = streams.front().capacity();
    for (const auto& s : streams) {
        if (s.capacity() != n || s.consumed() != 0) {
            throw std::invalid_argument(std::string(who) + ": streams must be fresh with a common capacity");
        }
    }
    return n;
}

} // namespace detail

/// Full MC: exhausts every stream, then applies BH.
inline FmcResult run_fmc(std::vector<SampleStream> streams, double alpha, unsigned threads = 1)
{
    const auto n = detail::common_capacity(streams, "run_fmc");
    const std::size_t m = streams.size();
    FmcResult out;
    out.p_values.resize(m);
    out.successes.resize(m);
    parallel_for(m, threads, [&](std::size_t i) {
        out.successes[i] = streams[i].next_successes(n);
        out.p_values[i] = static_cast<double>(1 + out.successes[i]) / static_cast<double>(n + 1);
    });
    out.bh = bh_procedure(out.p_values, alpha);
    out.total_samples = static_cast<std::uint64_t>(m) * n;
    return out;
}

struct SmcResult {
    std::vector<double> p_values;
    std::vector<std::uint64_t> samples_used; // K_i
    std::vector<std::uint64_t> successes;    // S_i
    std::uint64_t s_param = 0;
    std::uint64_t total_samples = 0;
};

struct SmcRun {
    SmcResult smc;
    BhOutcome bh;
};

/// Sequential MC: per hypothesis, sample until the s-th one or the n-th bit.
/// p = s/K when stopped early, (S+1)/(n+1) at the cap.
inline SmcRun run_smc(std::vector<SampleStream> streams, std::uint64_t s, double alpha, unsigned threads = 1)
{
    if (s < 1) {
        throw std::invalid_argument("run_smc: s must be positive");
    }
    const auto n = detail::common_capacity(streams, "run_smc");
    const std::size_t m = streams.size();
    SmcRun out;
    auto& r = out.smc;
    r.s_param = s;
    r.p_values.resize(m);
    r.samples_used.resize(m);
    r.successes.resize(m);
    parallel_for(m, threads, [&](std::size_t i) {
        const auto k = streams[i].consume_until_successes(s);
        r.samples_used[i] = k;
        r.successes[i] = streams[i].successes();
        r.p_values[i] = k < n ? static_cast<double>(s) / static_cast<double>(k)
                              : static_cast<double>(r.successes[i] + 1) / static_cast<double>(n + 1);
    });
    for (auto k : r.samples_used) {
        r.total_samples += k;
    }
    out.bh = bh_procedure(r.p_values, alpha);
    return out;
}

} // namespace amt
