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
#include <map>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "amt/numerics.hpp"

namespace amt {

enum class StatisticKind { pearson_correlation, chi_squared };

inline std::string to_string(StatisticKind kind)
{
    return kind == StatisticKind::pearson_correlation ? "pearson" : "chi2";
}

namespace detail {

/// Dense category codes in sorted order of the distinct values.
template <typename T>
std::vector<std::uint32_t> category_codes(std::span<const T> values, std::uint32_t& levels)
{
    std::map<T, std::uint32_t> index;
    for (const auto& v : values) {
        index.emplace(v, 0);
    }
    std::uint32_t next = 0;
    for (auto& [key, code] : index) {
        code = next++;
    }
    levels = next;
    std::vector<std::uint32_t> codes;
    codes.reserve(values.size());
    for (const auto& v : values) {
        codes.push_back(index.at(v));
    }
    return codes;
}

/// Pearson chi-squared of the contingency table of (x, y). Zero margins are
/// skipped. `table` is caller-provided scratch of size rows*cols.
inline double chi_squared_from_codes(std::span<const std::uint32_t> x, std::uint32_t rows,
                                     std::span<const std::uint32_t> y, std::uint32_t cols,
                                     std::span<const double> row_totals, std::span<const double> col_totals,
                                     std::vector<std::uint32_t>& table)
{
    if (rows < 2 || cols < 2) {
        return 0.0;
    }
    table.assign(static_cast<std::size_t>(rows) * cols, 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        ++table[static_cast<std::size_t>(x[i]) * cols + y[i]];
    }
    const double total = static_cast<double>(x.size());
    double stat = 0.0;
    for (std::uint32_t r = 0; r < rows; ++r) {
        if (row_totals[r] == 0.0) {
            continue;
        }
        for (std::uint32_t c = 0; c < cols; ++c) {
            if (col_totals[c] == 0.0) {
                continue;
            }
            const double expected = row_totals[r] * col_totals[c] / total;
            const double diff = static_cast<double>(table[static_cast<std::size_t>(r) * cols + c]) - expected;
            stat += diff * diff / expected;
        }
    }
    return stat;
}

inline std::vector<double> margin_totals(std::span<const std::uint32_t> codes, std::uint32_t levels)
{
    std::vector<double> totals(levels, 0.0);
    for (auto c : codes) {
        totals[c] += 1.0;
    }
    return totals;
}

/// Centers `values` in place and returns the sum of squares.
inline double center(std::vector<double>& values)
{
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (auto& v : values) {
        v -= mean;
        ss += v * v;
    }
    return ss;
}

inline double centered_correlation(std::span<const double> cx, double sxx, std::span<const double> cy, double syy)
{
    if (sxx <= 0.0 || syy <= 0.0) {
        return 0.0;
    }
    double sxy = 0.0;
    for (std::size_t i = 0; i < cx.size(); ++i) {
        sxy += cx[i] * cy[i];
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

} // namespace detail

/// Sample correlation; 0 when either input has zero variance.
inline double pearson_correlation(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("pearson_correlation: length mismatch");
    }
    if (x.size() < 2) {
        throw std::invalid_argument("pearson_correlation: need at least two observations");
    }
    std::vector<double> cx(x.begin(), x.end());
    std::vector<double> cy(y.begin(), y.end());
    const double sxx = detail::center(cx);
    const double syy = detail::center(cy);
    return detail::centered_correlation(cx, sxx, cy, syy);
}

/// Pearson chi-squared statistic of the contingency table of two categorical
/// vectors. Any totally ordered value type works as a category label.
template <typename T, typename U>
double chi_squared_statistic(std::span<const T> x, std::span<const U> y)
{
    if (x.size() != y.size()) {
        throw std::invalid_argument("chi_squared_statistic: length mismatch");
    }
    if (x.empty()) {
        throw std::invalid_argument("chi_squared_statistic: empty input");
    }
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    const auto xc = detail::category_codes(x, rows);
    const auto yc = detail::category_codes(y, cols);
    const auto row_totals = detail::margin_totals(xc, rows);
    const auto col_totals = detail::margin_totals(yc, cols);
    std::vector<std::uint32_t> table;
    return detail::chi_squared_from_codes(xc, rows, yc, cols, row_totals, col_totals, table);
}

template <typename T, typename U>
double chi_squared_statistic(const std::vector<T>& x, const std::vector<U>& y)
{
    return chi_squared_statistic(std::span<const T>(x), std::span<const U>(y));
}

/// One hypothesis of a permutation test. For chi_squared the values are
/// treated as category labels (exact equality); for pearson_correlation as reals.
struct PermutationArm {
    std::vector<double> input;
    std::vector<double> response;
    StatisticKind kind = StatisticKind::chi_squared;
    double observed_statistic = 0.0;
};

inline double evaluate_statistic(StatisticKind kind, std::span<const double> x, std::span<const double> y)
{
    return kind == StatisticKind::pearson_correlation ? pearson_correlation(x, y) : chi_squared_statistic(x, y);
}

inline PermutationArm make_permutation_arm(std::vector<double> input, std::vector<double> response, StatisticKind kind)
{
    if (input.size() != response.size()) {
        throw std::invalid_argument("make_permutation_arm: input and response lengths differ");
    }
    PermutationArm arm{std::move(input), std::move(response), kind, 0.0};
    arm.observed_statistic = evaluate_statistic(kind, arm.input, arm.response);
    return arm;
}

namespace detail {

/// Precomputed state for evaluating an arm's statistic under permutations of
/// the response. Uses the same arithmetic as the public statistic functions,
/// so the identity permutation reproduces observed_statistic bit for bit.
class ArmEvaluator {
public:
    explicit ArmEvaluator(const PermutationArm& arm) : kind_(arm.kind), observed_(arm.observed_statistic)
    {
        if (arm.input.size() != arm.response.size()) {
            throw std::invalid_argument("permutation arm: input and response lengths differ");
        }
        if (kind_ == StatisticKind::chi_squared) {
            std::span<const double> x(arm.input);
            std::span<const double> y(arm.response);
            x_codes_ = category_codes(x, rows_);
            y_codes_ = category_codes(y, cols_);
            row_totals_ = margin_totals(x_codes_, rows_);
            col_totals_ = margin_totals(y_codes_, cols_);
        } else {
            cx_ = arm.input;
            cy_ = arm.response;
            sxx_ = center(cx_);
            syy_ = center(cy_);
        }
        tie_slack_ = 1e-12 * std::max(1.0, std::fabs(observed_));
    }

    std::size_t size() const noexcept { return kind_ == StatisticKind::chi_squared ? x_codes_.size() : cx_.size(); }

    /// Fresh scratch holding the response in its original order.
    struct Scratch {
        std::vector<std::uint32_t> codes;
        std::vector<double> values;
        std::vector<std::uint32_t> table;
    };

    Scratch make_scratch() const { return Scratch{y_codes_, cy_, {}}; }

    /// Shuffles the scratch response (Fisher-Yates) and returns
    /// 1{T_null >= T_obs}. Shuffling an already-shuffled vector is still a
    /// uniform permutation of the original.
    std::uint8_t draw(Scratch& s, Substream& rng) const
    {
        if (kind_ == StatisticKind::chi_squared) {
            shuffle(s.codes, rng);
            const double t = chi_squared_from_codes(x_codes_, rows_, s.codes, cols_, row_totals_, col_totals_, s.table);
            return t >= observed_ - tie_slack_ ? 1 : 0;
        }
        shuffle(s.values, rng);
        const double t = centered_correlation(cx_, sxx_, s.values, syy_);
        return t >= observed_ - tie_slack_ ? 1 : 0;
    }

private:
    template <typename V>
    static void shuffle(std::vector<V>& v, Substream& rng)
    {
        for (std::size_t i = v.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(rng.bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    StatisticKind kind_;
    double observed_;
    double tie_slack_ = 0.0;
    std::vector<std::uint32_t> x_codes_, y_codes_;
    std::uint32_t rows_ = 0, cols_ = 0;
    std::vector<double> row_totals_, col_totals_;
    std::vector<double> cx_, cy_;
    double sxx_ = 0.0, syy_ = 0.0;
};

struct BernoulliSource {
    Substream rng;
    std::uint64_t threshold = 0;
    bool always_one = false;

    std::uint8_t draw() noexcept
    {
        const auto u = rng();
        return always_one || u < threshold ? 1 : 0;
    }
};

struct PermutationSource {
    std::shared_ptr<const ArmEvaluator> evaluator;
    Substream rng;
    ArmEvaluator::Scratch scratch;

    std::uint8_t draw() { return evaluator->draw(scratch, rng); }
};

} // namespace detail

/// A capped, seeded source of binary MC samples for one hypothesis. Bits are
/// produced in a fixed order, so any batch split of the same stream yields
/// the same prefix.
class SampleStream {
public:
    using Source = std::variant<detail::BernoulliSource, detail::PermutationSource>;

    SampleStream(std::uint64_t capacity, Source source) : capacity_(capacity), source_(std::move(source))
    {
        if (capacity_ == 0) {
            throw std::invalid_argument("SampleStream: capacity must be positive");
        }
    }

    std::uint64_t capacity() const noexcept { return capacity_; }
    std::uint64_t consumed() const noexcept { return consumed_; }
    std::uint64_t successes() const noexcept { return successes_; }
    std::uint64_t remaining() const noexcept { return capacity_ - consumed_; }
    bool exhausted() const noexcept { return consumed_ == capacity_; }

    std::vector<std::uint8_t> next(std::uint64_t count)
    {
        check(count);
        std::vector<std::uint8_t> bits(count);
        std::visit(
            [&](auto& src) {
                for (auto& b : bits) {
                    b = src.draw();
                }
            },
            source_);
        for (auto b : bits) {
            successes_ += b;
        }
        consumed_ += count;
        return bits;
    }

    /// Same bits as next(count), returning only how many were ones.
    std::uint64_t next_successes(std::uint64_t count)
    {
        check(count);
        std::uint64_t ones = 0;
        std::visit(
            [&](auto& src) {
                for (std::uint64_t j = 0; j < count; ++j) {
                    ones += src.draw();
                }
            },
            source_);
        successes_ += ones;
        consumed_ += count;
        return ones;
    }

    /// Consumes bits until `target` ones have been seen in this call or the
    /// stream runs out. Returns the number of bits consumed.
    std::uint64_t consume_until_successes(std::uint64_t target)
    {
        std::uint64_t taken = 0;
        std::uint64_t ones = 0;
        std::visit(
            [&](auto& src) {
                while (ones < target && consumed_ + taken < capacity_) {
                    ones += src.draw();
                    ++taken;
                }
            },
            source_);
        successes_ += ones;
        consumed_ += taken;
        return taken;
    }

private:
    void check(std::uint64_t count) const
    {
        if (count > remaining()) {
            throw std::out_of_range("SampleStream: request exceeds remaining capacity");
        }
    }

    std::uint64_t capacity_;
    std::uint64_t consumed_ = 0;
    std::uint64_t successes_ = 0;
    Source source_;
};

inline SampleStream bernoulli_stream(double p_ideal, std::uint64_t n, StreamSeed seed)
{
    if (!(p_ideal >= 0.0 && p_ideal <= 1.0)) {
        throw std::invalid_argument("bernoulli_stream: probability outside [0, 1]");
    }
    seed.purpose = StreamPurpose::mc_sampling;
    detail::BernoulliSource src{derive_substream(seed), 0, p_ideal >= 1.0};
    if (!src.always_one) {
        src.threshold = static_cast<std::uint64_t>(std::ldexp(p_ideal, 64));
    }
    return SampleStream(n, src);
}

inline SampleStream permutation_stream(std::shared_ptr<const PermutationArm> arm, std::uint64_t n, StreamSeed seed)
{
    if (!arm) {
        throw std::invalid_argument("permutation_stream: null arm");
    }
    auto evaluator = std::make_shared<const detail::ArmEvaluator>(*arm);
    seed.purpose = StreamPurpose::permutation;
    detail::PermutationSource src{evaluator, derive_substream(seed), evaluator->make_scratch()};
    return SampleStream(n, std::move(src));
}

inline SampleStream permutation_stream(const PermutationArm& arm, std::uint64_t n, StreamSeed seed)
{
    return permutation_stream(std::make_shared<const PermutationArm>(arm), n, seed);
}

} // namespace amt
