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

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "amt/amt_engine.hpp"
#include "amt/baselines.hpp"
#include "amt/dataset.hpp"
#include "amt/report.hpp"
#include "amt/sim_harness.hpp"

namespace amt::cli {

struct Options {
    double alpha = 0.1;
    double delta = 0.01;
    std::uint64_t n = 10000;
    std::uint64_t h1 = 100;
    double gamma = 1.1;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string statistic = "auto";
    double missing_threshold = 0.05;
    std::string missing_marker = "NA";
    std::uint64_t smc_s = 0;
    std::string out;
    std::string format = "json";
    std::string data;
    std::string response = "y";
    std::size_t m = 1000;
    double alt_proportion = 0.2;
    double mu = 2.5;
    std::string methods = "amt,smc,fmc";
    // simulate
    std::size_t reps = 200;
    std::vector<std::size_t> m_list{100, 200, 400, 800, 1600};
    std::string parameter = "alpha";
    std::vector<double> values{0.05, 0.1, 0.2};
};

struct Inputs {
    std::vector<std::string> names;
    std::vector<SampleStream> streams;
    Json info;
};

inline std::optional<StatisticKind> parse_statistic(const std::string& s)
{
    if (s == "chi2") {
        return StatisticKind::chi_squared;
    }
    if (s == "pearson") {
        return StatisticKind::pearson_correlation;
    }
    return std::nullopt;
}

inline SimSpec sim_spec(const Options& o)
{
    SimSpec spec;
    spec.m = o.m;
    spec.alt_proportion = o.alt_proportion;
    spec.mu_alt = o.mu;
    spec.n = o.n;
    spec.alpha = o.alpha;
    spec.delta = o.delta;
    spec.reps = o.reps;
    spec.master_seed = o.seed;
    spec.h1 = o.h1;
    spec.gamma = o.gamma;
    spec.smc_s = o.smc_s;
    return spec;
}

/// Permutation arms from --data, or simulated z-test arms otherwise.
inline Inputs build_inputs(const Options& o)
{
    Inputs in;
    if (!o.data.empty()) {
        const auto ds = load_dataset(o.data, o.response, o.missing_threshold, o.missing_marker);
        const auto arms = make_arms(ds, parse_statistic(o.statistic));
        for (std::size_t i = 0; i < arms.size(); ++i) {
            in.names.push_back(ds.inputs[i].name);
            in.streams.push_back(permutation_stream(arms[i], o.n, {o.seed, i, StreamPurpose::permutation}));
        }
        Json statistics = Json::array();
        for (const auto& arm : arms) {
            statistics.push_back(to_string(arm->kind));
        }
        in.info = Json{{"source", "dataset"},
                       {"rows", ds.rows()},
                       {"rows_dropped_missing_response", ds.dropped_rows},
                       {"hypotheses", arms.size()},
                       {"dropped_columns", ds.dropped_columns},
                       {"statistics", std::move(statistics)}};
        return in;
    }
    const auto spec = sim_spec(o);
    const auto ideal = gen_ideal_pvalues(spec, 0);
    in.streams = make_bernoulli_streams(ideal.p, o.n, rep_seed(spec, 0));
    for (std::size_t i = 0; i < o.m; ++i) {
        in.names.push_back("h" + std::to_string(i));
    }
    in.info = Json{{"source", "simulated"},
                   {"hypotheses", o.m},
                   {"alternatives", spec.alternatives()},
                   {"alt_proportion", o.alt_proportion},
                   {"mu", o.mu}};
    return in;
}

inline Json config_echo(const Options& o, const std::string& method)
{
    Json c{{"method", method},     {"alpha", o.alpha}, {"delta", o.delta}, {"n", o.n},
           {"h1", o.h1},           {"gamma", o.gamma}, {"seed", o.seed},   {"smc_s", o.smc_s}};
    if (!o.data.empty()) {
        c["data"] = o.data;
        c["response"] = o.response;
        c["statistic"] = o.statistic;
        c["missing_threshold"] = o.missing_threshold;
        c["missing_marker"] = o.missing_marker;
    } else {
        c["m"] = o.m;
        c["alt_proportion"] = o.alt_proportion;
        c["mu"] = o.mu;
    }
    return c;
}

inline double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

inline Json run_method(const std::string& method, const Options& o, const Inputs& in)
{
    const auto start = std::chrono::steady_clock::now();
    Json report;
    report["method"] = method;
    report["config"] = config_echo(o, method);
    report["input"] = in.info;
    Json discoveries = Json::array();
    if (method == "amt") {
        const auto r = run_amt(in.streams, AmtConfig{o.alpha, o.delta, o.n, o.h1, o.gamma}, o.threads);
        for (auto i : r.discoveries) {
            const auto& cb = r.hypotheses[i].cb;
            discoveries.push_back(Json{{"column_name", in.names[i]},
                                       {"p_lb", cb.p_lb},
                                       {"p_ub", cb.p_ub},
                                       {"samples_used", cb.k}});
        }
        report["discoveries"] = std::move(discoveries);
        report["critical_rank"] = r.r_hat;
        report["threshold"] = r.tau_hat;
        report["per_side_error"] = r.per_side_error;
        Json log = Json::array();
        for (const auto& rec : r.log) {
            log.push_back(Json{{"round", rec.round},
                               {"sampled", rec.sampled},
                               {"samples", rec.samples},
                               {"r_hat", rec.r_hat},
                               {"tau_hat", rec.tau_hat},
                               {"certain_greater", rec.certain_greater},
                               {"certain_less", rec.certain_less},
                               {"uncertain", rec.uncertain}});
        }
        report["round_log"] = std::move(log);
        report["totals"] = Json{{"total_samples", r.total_samples}, {"rounds", r.rounds}};
    } else if (method == "fmc") {
        const auto r = run_fmc(in.streams, o.alpha, o.threads);
        for (auto i : r.bh.rejected) {
            discoveries.push_back(Json{{"column_name", in.names[i]}, {"p_value", r.p_values[i]}, {"samples_used", o.n}});
        }
        report["discoveries"] = std::move(discoveries);
        report["critical_rank"] = r.bh.critical_rank;
        report["threshold"] = r.bh.threshold;
        report["totals"] = Json{{"total_samples", r.total_samples}, {"rounds", 1}};
    } else if (method == "smc") {
        const std::uint64_t s =
            o.smc_s > 0 ? o.smc_s
                        : smc_recommended_s(o.alpha, o.n, in.streams.size(), std::max<std::size_t>(1, in.streams.size() / 10));
        const auto r = run_smc(in.streams, s, o.alpha, o.threads);
        for (auto i : r.bh.rejected) {
            discoveries.push_back(Json{{"column_name", in.names[i]},
                                       {"p_value", r.smc.p_values[i]},
                                       {"samples_used", r.smc.samples_used[i]}});
        }
        report["discoveries"] = std::move(discoveries);
        report["critical_rank"] = r.bh.critical_rank;
        report["threshold"] = r.bh.threshold;
        report["smc_s"] = s;
        report["totals"] = Json{{"total_samples", r.smc.total_samples}, {"rounds", 1}};
    } else {
        throw std::invalid_argument("unknown method '" + method + "'");
    }
    report["totals"]["wall_seconds"] = seconds_since(start);
    return report;
}

inline std::string method_csv(const Json& report)
{
    std::ostringstream os;
    for (const auto& d : report["discoveries"]) {
        os << report["method"].get<std::string>() << ',' << d["column_name"].get<std::string>() << ',';
        if (d.contains("p_lb")) {
            os << d["p_lb"].dump() << ',' << d["p_ub"].dump() << ",,";
        } else {
            os << ",," << d["p_value"].dump() << ',';
        }
        os << d["samples_used"].dump() << '\n';
    }
    return os.str();
}

inline constexpr const char* kMethodCsvHeader = "method,column_name,p_lb,p_ub,p_value,samples_used\n";

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

inline void add_run_options(CLI::App* cmd, Options& o)
{
    cmd->add_option("--alpha", o.alpha, "Nominal FDR")->capture_default_str();
    cmd->add_option("--delta", o.delta, "Failure probability for recovering the fMC result")->capture_default_str();
    cmd->add_option("--n", o.n, "MC samples per hypothesis for fMC")->capture_default_str();
    cmd->add_option("--h1", o.h1, "First batch size")->capture_default_str();
    cmd->add_option("--gamma", o.gamma, "Batch growth factor")->capture_default_str();
    cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
    cmd->add_option("--threads", o.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--smc-s", o.smc_s, "sMC stopping count (0 = recommended)")->capture_default_str();
    cmd->add_option("--out", o.out, "Write the report to this file instead of stdout");
    cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
}

inline void add_input_options(CLI::App* cmd, Options& o)
{
    cmd->add_option("--data", o.data, "CSV file with a header row")->check(CLI::ExistingFile);
    cmd->add_option("--response", o.response, "Response column name")->capture_default_str();
    cmd->add_option("--statistic", o.statistic, "Test statistic")
        ->check(CLI::IsMember({"auto", "chi2", "pearson"}))
        ->capture_default_str();
    cmd->add_option("--missing-threshold", o.missing_threshold, "Drop columns with a larger missing fraction")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--missing-marker", o.missing_marker, "Cell text meaning missing")->capture_default_str();
    cmd->add_option("--m", o.m, "Simulated hypotheses (without --data)")->capture_default_str();
    cmd->add_option("--alt-proportion", o.alt_proportion, "Simulated alternative proportion")->capture_default_str();
    cmd->add_option("--mu", o.mu, "Simulated alternative effect size")->capture_default_str();
}

inline void emit(const Options& o, const std::string& body, std::ostream& out)
{
    if (o.out.empty()) {
        out << body;
        return;
    }
    std::ofstream file(o.out);
    if (!file) {
        throw std::runtime_error("cannot write '" + o.out + "'");
    }
    file << body;
}

/// Parses `args` (without the program name), runs the command and writes the
/// report. Returns the process exit status.
inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    Options o;
    CLI::App app{"Adaptive Monte Carlo multiple testing"};
    app.require_subcommand(1);

    auto* amt_cmd = app.add_subcommand("amt", "Adaptive MC multiple testing");
    auto* fmc_cmd = app.add_subcommand("fmc", "Full MC p-values followed by BH");
    auto* smc_cmd = app.add_subcommand("smc", "Sequential MC p-values followed by BH");
    auto* compare_cmd = app.add_subcommand("compare", "Run several methods on coupled streams");
    for (auto* cmd : {amt_cmd, fmc_cmd, smc_cmd, compare_cmd}) {
        add_run_options(cmd, o);
        add_input_options(cmd, o);
    }
    compare_cmd->add_option("--methods", o.methods, "Comma-separated subset of amt,smc,fmc")->capture_default_str();

    auto* sim_cmd = app.add_subcommand("simulate", "Simulation experiments");
    sim_cmd->require_subcommand(1);
    auto* table1 = sim_cmd->add_subcommand("table1", "Recovery rate and sample counts over repetitions");
    auto* scaling = sim_cmd->add_subcommand("scaling", "Samples per hypothesis as m grows with n = 10m");
    auto* sweep = sim_cmd->add_subcommand("sweep", "Vary alpha, alt_proportion or mu");
    for (auto* cmd : {table1, scaling, sweep}) {
        add_run_options(cmd, o);
        cmd->add_option("--m", o.m, "Hypotheses")->capture_default_str();
        cmd->add_option("--alt-proportion", o.alt_proportion, "Alternative proportion")->capture_default_str();
        cmd->add_option("--mu", o.mu, "Alternative effect size")->capture_default_str();
        cmd->add_option("--reps", o.reps, "Repetitions")->capture_default_str();
    }
    scaling->add_option("--m-list", o.m_list, "Grid of m values")->delimiter(',')->capture_default_str();
    sweep->add_option("--parameter", o.parameter, "Parameter to vary")
        ->check(CLI::IsMember({"alpha", "alt_proportion", "mu"}))
        ->capture_default_str();
    sweep->add_option("--values", o.values, "Parameter values")->delimiter(',')->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << app.help();
        return e.get_exit_code() != 0 ? e.get_exit_code() : 1;
    }

    try {
        const auto start = std::chrono::steady_clock::now();
        if (sim_cmd->parsed()) {
            const ExperimentOptions options{o.threads, true};
            const auto spec = sim_spec(o);
            ExperimentReport report;
            if (table1->parsed()) {
                report = reliability_experiment(spec, options);
            } else if (scaling->parsed()) {
                report = scaling_experiment(o.m_list, spec, options);
            } else {
                const auto p = o.parameter == "alpha"            ? SweepParameter::alpha
                               : o.parameter == "alt_proportion" ? SweepParameter::alt_proportion
                                                                 : SweepParameter::mu;
                report = sweep_experiment(p, o.values, spec, options);
            }
            if (o.format == "csv") {
                emit(o, to_csv(report), out);
            } else {
                auto j = to_json(report);
                j["wall_seconds"] = seconds_since(start);
                emit(o, j.dump(2) + "\n", out);
            }
            return 0;
        }

        std::vector<std::string> methods;
        if (compare_cmd->parsed()) {
            methods = split_list(o.methods);
            if (methods.empty()) {
                throw std::invalid_argument("--methods is empty");
            }
        } else {
            methods.push_back(amt_cmd->parsed() ? "amt" : fmc_cmd->parsed() ? "fmc" : "smc");
        }
        const auto inputs = build_inputs(o);
        std::vector<Json> reports;
        for (const auto& method : methods) {
            reports.push_back(run_method(method, o, inputs));
        }

        if (o.format == "csv") {
            std::string body = kMethodCsvHeader;
            for (const auto& r : reports) {
                body += method_csv(r);
            }
            emit(o, body, out);
            return 0;
        }
        if (!compare_cmd->parsed()) {
            emit(o, reports.front().dump(2) + "\n", out);
            return 0;
        }
        Json j;
        j["command"] = "compare";
        j["methods"] = methods;
        Json arr = Json::array();
        const Json* amt_report = nullptr;
        const Json* fmc_report = nullptr;
        for (const auto& r : reports) {
            arr.push_back(r);
        }
        j["reports"] = std::move(arr);
        for (const auto& r : j["reports"]) {
            if (r["method"] == "amt") {
                amt_report = &r;
            } else if (r["method"] == "fmc") {
                fmc_report = &r;
            }
        }
        if (amt_report && fmc_report) {
            std::vector<std::string> a, f;
            for (const auto& d : (*amt_report)["discoveries"]) {
                a.push_back(d["column_name"]);
            }
            for (const auto& d : (*fmc_report)["discoveries"]) {
                f.push_back(d["column_name"]);
            }
            j["amt_matches_fmc"] = a == f;
        }
        emit(o, j.dump(2) + "\n", out);
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace amt::cli
