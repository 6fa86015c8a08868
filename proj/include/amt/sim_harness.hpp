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
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "amt/amt_engine.hpp"
#include "amt/baselines.hpp"
#include "amt/multiple_testing.hpp"
#include "amt/numerics.hpp"
#include "amt/parallel.hpp"
#include "amt/sample_source.hpp"

namespace amt {

/// Generative model: m one-sided z-tests, the first round(m·alt_proportion)
/// with mean mu_alt, the rest null.
struct SimSpec {
    std::size_t m = 1000;
    double alt_proportion = 0.2;
    double mu_alt = 2.5;
    std::uint64_t n = 10000;
    double alpha = 0.1;
    double delta = 0.01;
    std::size_t reps = 200;
    std::uint64_t master_seed = 0;
    std::uint64_t h1 = 100;
    double gamma = 1.1;
    std::uint64_t smc_s = 0; // 0 selects smc_recommended_s with r_guess = m/10

    std::size_t alternatives() const noexcept
    {
        return static_cast<std::size_t>(std::llround(static_cast<double>(m) * alt_proportion));
    }

    AmtConfig amt_config() const { return AmtConfig{alpha, delta, n, h1, gamma}; }

    std::uint64_t effective_smc_s() const
    {
        if (smc_s > 0) {
            return smc_s;
        }
        return smc_recommended_s(alpha, n, m, std::max<std::uint64_t>(1, m / 10));
    }

    void validate() const
    {
        if (m == 0) {
            throw std::invalid_argument("SimSpec: m must be positive");
        }
        if (!(alt_proportion >= 0.0 && alt_proportion <= 1.0)) {
            throw std::invalid_argument("SimSpec: alt_proportion must lie in [0, 1]");
        }
        if (!std::isfinite(mu_alt)) {
            throw std::invalid_argument("SimSpec: mu_alt must be finite");
        }
        amt_config().validate();
    }
};

/// Upper-tail p-value of a z-score, 1 - Φ(z), evaluated without cancellation.
inline double upper_tail_p_value(double z) { return std_normal_cdf(-z); }

inline std::uint64_t rep_seed(const SimSpec& spec, std::size_t rep_index)
{
    return child_seed(spec.master_seed, rep_index);
}

struct IdealPValues {
    std::vector<double> p;
    std::vector<double> z;
    std::vector<bool> null_mask;
};

inline IdealPValues gen_ideal_pvalues(const SimSpec& spec, std::size_t rep_index)
{
    spec.validate();
    const std::size_t alts = spec.alternatives();
    const std::uint64_t seed = rep_seed(spec, rep_index);
    IdealPValues out;
    out.p.resize(spec.m);
    out.z.resize(spec.m);
    out.null_mask.resize(spec.m);
    for (std::size_t i = 0; i < spec.m; ++i) {
        auto rng = derive_substream({seed, i, StreamPurpose::data_generation});
        const bool is_null = i >= alts;
        out.null_mask[i] = is_null;
        out.z[i] = (is_null ? 0.0 : spec.mu_alt) + rng.normal();
        out.p[i] = upper_tail_p_value(out.z[i]);
    }
    return out;
}

inline std::vector<SampleStream> make_bernoulli_streams(std::span<const double> p_ideal, std::uint64_t n, std::uint64_t seed)
{
    std::vector<SampleStream> streams;
    streams.reserve(p_ideal.size());
    for (std::size_t i = 0; i < p_ideal.size(); ++i) {
        streams.push_back(bernoulli_stream(p_ideal[i], n, {seed, i, StreamPurpose::mc_sampling}));
    }
    return streams;
}

struct RepRecord {
    std::size_t rep = 0;
    bool recovery = false; // AMT discoveries == fMC discoveries
    double avg_samples_amt = 0.0;
    double avg_samples_smc = 0.0;
    double avg_samples_fmc = 0.0;
    double fdp_amt = 0.0;
    double fdp_fmc = 0.0;
    std::size_t discoveries_amt = 0;
    std::size_t discoveries_fmc = 0;
    std::size_t discoveries_smc = 0;
    std::size_t rounds = 0;
};

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

struct Aggregates {
    std::size_t reps = 0;
    double recovery_rate = 0.0;
    MeanSd samples_amt;
    MeanSd samples_smc;
    MeanSd samples_fmc;
    double fdr_amt = 0.0;
    double fdr_amt_se = 0.0;
    double fdr_fmc = 0.0;
    double mean_discoveries_amt = 0.0;
    double mean_discoveries_fmc = 0.0;
    double mean_discoveries_smc = 0.0;
};

struct GridPoint {
    std::string parameter;
    double value = 0.0;
    SimSpec spec;
    std::vector<RepRecord> reps;
    Aggregates aggregates;
};

struct ExperimentReport {
    std::string experiment;
    SimSpec spec;
    std::vector<RepRecord> reps;
    Aggregates aggregates;
    std::vector<GridPoint> grid;
    std::optional<double> amt_slope;
    std::optional<double> smc_slope;
};

struct ExperimentOptions {
    unsigned threads = 1;
    bool with_smc = true;
};

namespace detail {

template <typename Get>
MeanSd mean_sd(std::span<const RepRecord> reps, Get get)
{
    MeanSd out;
    if (reps.empty()) {
        return out;
    }
    double sum = 0.0;
    for (const auto& r : reps) {
        sum += get(r);
    }
    out.mean = sum / static_cast<double>(reps.size());
    if (reps.size() > 1) {
        double ss = 0.0;
        for (const auto& r : reps) {
            const double d = get(r) - out.mean;
            ss += d * d;
        }
        out.sd = std::sqrt(ss / static_cast<double>(reps.size() - 1));
    }
    return out;
}

} // namespace detail

inline Aggregates aggregate(std::span<const RepRecord> reps)
{
    Aggregates a;
    a.reps = reps.size();
    if (reps.empty()) {
        return a;
    }
    a.recovery_rate = detail::mean_sd(reps, [](const RepRecord& r) { return r.recovery ? 1.0 : 0.0; }).mean;
    a.samples_amt = detail::mean_sd(reps, [](const RepRecord& r) { return r.avg_samples_amt; });
    a.samples_smc = detail::mean_sd(reps, [](const RepRecord& r) { return r.avg_samples_smc; });
    a.samples_fmc = detail::mean_sd(reps, [](const RepRecord& r) { return r.avg_samples_fmc; });
    const auto fdr = detail::mean_sd(reps, [](const RepRecord& r) { return r.fdp_amt; });
    a.fdr_amt = fdr.mean;
    a.fdr_amt_se = fdr.sd / std::sqrt(static_cast<double>(reps.size()));
    a.fdr_fmc = detail::mean_sd(reps, [](const RepRecord& r) { return r.fdp_fmc; }).mean;
    a.mean_discoveries_amt = detail::mean_sd(reps, [](const RepRecord& r) { return double(r.discoveries_amt); }).mean;
    a.mean_discoveries_fmc = detail::mean_sd(reps, [](const RepRecord& r) { return double(r.discoveries_fmc); }).mean;
    a.mean_discoveries_smc = detail::mean_sd(reps, [](const RepRecord& r) { return double(r.discoveries_smc); }).mean;
    return a;
}

/// One repetition: fresh ideal p-values, then fMC, AMT and (optionally) sMC on
/// coupled streams built from the same seeds.
inline RepRecord run_repetition(const SimSpec& spec, std::size_t rep_index, bool with_smc = true)
{
    const auto ideal = gen_ideal_pvalues(spec, rep_index);
    const auto streams = make_bernoulli_streams(ideal.p, spec.n, rep_seed(spec, rep_index));
    const double m = static_cast<double>(spec.m);

    const auto fmc = run_fmc(streams, spec.alpha);
    const auto adaptive = run_amt(streams, spec.amt_config());

    RepRecord r;
    r.rep = rep_index;
    r.recovery = adaptive.discoveries == fmc.bh.rejected;
    r.avg_samples_amt = static_cast<double>(adaptive.total_samples) / m;
    r.avg_samples_fmc = static_cast<double>(fmc.total_samples) / m;
    r.fdp_amt = fdp(adaptive.discoveries, ideal.null_mask);
    r.fdp_fmc = fdp(fmc.bh.rejected, ideal.null_mask);
    r.discoveries_amt = adaptive.discoveries.size();
    r.discoveries_fmc = fmc.bh.rejected.size();
    r.rounds = adaptive.rounds;
    if (with_smc) {
        const auto smc = run_smc(streams, spec.effective_smc_s(), spec.alpha);
        r.avg_samples_smc = static_cast<double>(smc.smc.total_samples) / m;
        r.discoveries_smc = smc.bh.rejected.size();
    }
    return r;
}

inline std::vector<RepRecord> run_repetitions(const SimSpec& spec, const ExperimentOptions& options)
{
    spec.validate();
    if (spec.reps < 1) {
        throw std::invalid_argument("reliability_experiment: reps must be positive");
    }
    std::vector<RepRecord> reps(spec.reps);
    parallel_for(spec.reps, options.threads,
                 [&](std::size_t i) { reps[i] = run_repetition(spec, i, options.with_smc); });
    return reps;
}

/// Repeated coupled AMT-vs-fMC comparison on one generative setting.
inline ExperimentReport reliability_experiment(const SimSpec& spec, const ExperimentOptions& options = {})
{
    ExperimentReport report;
    report.experiment = "reliability";
    report.spec = spec;
    report.reps = run_repetitions(spec, options);
    report.aggregates = aggregate(report.reps);
    return report;
}

/// Least-squares slope of log(ys) against log(xs).
inline double fit_loglog_slope(std::span<const double> xs, std::span<const double> ys)
{
    if (xs.size() != ys.size() || xs.size() < 2) {
        throw std::invalid_argument("fit_loglog_slope: need two or more paired points");
    }
    const std::size_t k = xs.size();
    std::vector<double> lx(k), ly(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
            throw std::invalid_argument("fit_loglog_slope: values must be positive");
        }
        lx[i] = std::log(xs[i]);
        ly[i] = std::log(ys[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(k);
    my /= static_cast<double>(k);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("fit_loglog_slope: xs must not all be equal");
    }
    return sxy / sxx;
}

namespace detail {

inline GridPoint run_grid_point(std::string parameter, double value, const SimSpec& spec, const ExperimentOptions& options)
{
    GridPoint g;
    g.parameter = std::move(parameter);
    g.value = value;
    g.spec = spec;
    g.reps = run_repetitions(spec, options);
    g.aggregates = aggregate(g.reps);
    return g;
}

} // namespace detail

/// Grows m with n = 10m and fits the log-log slope of mean samples per
/// hypothesis against n for AMT and sMC. Each grid point gets its own seed.
inline ExperimentReport scaling_experiment(std::span<const std::size_t> m_list, const SimSpec& spec_template,
                                           const ExperimentOptions& options = {})
{
    if (m_list.size() < 2) {
        throw std::invalid_argument("scaling_experiment: need at least two grid points");
    }
    ExperimentReport report;
    report.experiment = "scaling";
    report.spec = spec_template;
    std::vector<double> ns, amt_avg, smc_avg;
    for (std::size_t g = 0; g < m_list.size(); ++g) {
        SimSpec spec = spec_template;
        spec.m = m_list[g];
        spec.n = 10 * static_cast<std::uint64_t>(spec.m);
        spec.master_seed = child_seed(spec_template.master_seed, g);
        report.grid.push_back(detail::run_grid_point("m", static_cast<double>(spec.m), spec, options));
        ns.push_back(static_cast<double>(spec.n));
        amt_avg.push_back(report.grid.back().aggregates.samples_amt.mean);
        smc_avg.push_back(report.grid.back().aggregates.samples_smc.mean);
    }
    report.amt_slope = fit_loglog_slope(ns, amt_avg);
    if (options.with_smc) {
        report.smc_slope = fit_loglog_slope(ns, smc_avg);
    }
    return report;
}

enum class SweepParameter { alpha, alt_proportion, mu };

inline std::string to_string(SweepParameter p)
{
    switch (p) {
    case SweepParameter::alpha:
        return "alpha";
    case SweepParameter::alt_proportion:
        return "alt_proportion";
    case SweepParameter::mu:
        return "mu";
    }
    return "unknown";
}

/// One reliability run per parameter value, with fresh seeds per value.
inline ExperimentReport sweep_experiment(SweepParameter parameter, std::span<const double> values,
                                         const SimSpec& spec_template, const ExperimentOptions& options = {})
{
    if (values.empty()) {
        throw std::invalid_argument("sweep_experiment: no parameter values");
    }
    ExperimentReport report;
    report.experiment = "sweep";
    report.spec = spec_template;
    for (std::size_t g = 0; g < values.size(); ++g) {
        SimSpec spec = spec_template;
        switch (parameter) {
        case SweepParameter::alpha:
            spec.alpha = values[g];
            break;
        case SweepParameter::alt_proportion:
            spec.alt_proportion = values[g];
            break;
        case SweepParameter::mu:
            spec.mu_alt = values[g];
            break;
        }
        spec.master_seed = child_seed(spec_template.master_seed, g);
        report.grid.push_back(detail::run_grid_point(to_string(parameter), values[g], spec, options));
    }
    return report;
}

} // namespace amt
