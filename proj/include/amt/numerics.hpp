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

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace amt {

// Standard normal distribution and seeded substreams.

inline double std_normal_cdf(double x)
{
    if (!std::isfinite(x)) {
        throw std::domain_error("std_normal_cdf: non-finite argument");
    }
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

/// Inverse of the standard normal CDF (Wichura's AS241, PPND16), followed by
/// one Halley step against std::erfc. Relative accuracy is ~1e-16 across the
/// whole open interval, including the deep tail used for tiny per-side errors.
inline double std_normal_quantile(double p)
{
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("std_normal_quantile: p must lie in (0, 1)");
    }
    const double q = p - 0.5;
    double x;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        x = q *
            (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                 45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
              133.14166789178437745) * r + 3.387132872796366608) /
            (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                 21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
              42.313330701600911252) * r + 1.0);
    } else {
        double r = q < 0.0 ? p : 1.0 - p;
        r = std::sqrt(-std::log(r));
        if (r <= 5.0) {
            r -= 1.6;
            x = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                     1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
                  4.6303378461565452959) * r + 1.42343711074968357734) /
                (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                     0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
                  2.05319162663775882187) * r + 1.0);
        } else {
            r -= 5.0;
            x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                     0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
                  5.4637849111641143699) * r + 6.6579046435011037772) /
                (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                     7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
                  0.59983220655588793769) * r + 1.0);
        }
        if (q < 0.0) {
            x = -x;
        }
    }
    // Halley refinement; computes the residual on the smaller tail to avoid cancellation.
    const double err = x < 0.0 ? 0.5 * std::erfc(-x * 0.70710678118654752440) - p
                               : (1.0 - p) - 0.5 * std::erfc(x * 0.70710678118654752440);
    const double u = err * 2.50662827463100050242 * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

enum class StreamPurpose : std::uint32_t {
    mc_sampling = 0,
    permutation = 1,
    data_generation = 2,
};

struct StreamSeed {
    std::uint64_t master_seed = 0;
    std::uint64_t hypothesis_index = 0;
    StreamPurpose purpose = StreamPurpose::mc_sampling;
};

inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Hash-combines a parent seed with a child key; used to split per-repetition
/// and per-grid-point master seeds.
inline constexpr std::uint64_t child_seed(std::uint64_t parent, std::uint64_t key) noexcept
{
    return mix64(mix64(parent + 0x9e3779b97f4a7c15ULL) ^ mix64(key + 0x632be59bd9b4e019ULL));
}

/// SplitMix64 over a hashed key. Output j is mix64(key + (j+1)·φ), so the
/// stream is counter-based: discard() is O(1) and state is a single word.
class Substream {
public:
    using result_type = std::uint64_t;

    constexpr Substream() noexcept = default;
    explicit constexpr Substream(std::uint64_t key) noexcept : state_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        state_ += kGolden;
        return mix64(state_);
    }

    constexpr void discard(std::uint64_t count) noexcept { state_ += count * kGolden; }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Unbiased integer in [0, bound) (Lemire's multiply-and-reject).
    std::uint64_t bounded(std::uint64_t bound) noexcept
    {
        unsigned __int128 product = static_cast<unsigned __int128>((*this)()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                product = static_cast<unsigned __int128>((*this)()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    /// Standard normal draw (Box-Muller, one variate per call; no cached state).
    double normal() noexcept
    {
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    friend constexpr bool operator==(const Substream&, const Substream&) = default;

private:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
    std::uint64_t state_ = 0;
};

inline constexpr Substream derive_substream(const StreamSeed& seed) noexcept
{
    std::uint64_t key = mix64(seed.master_seed ^ 0x6a09e667f3bcc909ULL);
    key = mix64(key ^ mix64(seed.hypothesis_index + 0xbb67ae8584caa73bULL));
    key = mix64(key ^ mix64(static_cast<std::uint64_t>(seed.purpose) + 0x3c6ef372fe94f82bULL));
    return Substream(key);
}

} // namespace amt
