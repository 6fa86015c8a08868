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

#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "amt/sim_harness.hpp"

namespace amt {

using Json = nlohmann::ordered_json;

inline Json to_json(const SimSpec& s)
{
    return Json{{"m", s.m},
                {"alt_proportion", s.alt_proportion},
                {"mu_alt", s.mu_alt},
                {"n", s.n},
                {"alpha", s.alpha},
                {"delta", s.delta},
                {"reps", s.reps},
                {"master_seed", s.master_seed},
                {"h1", s.h1},
                {"gamma", s.gamma},
                {"smc_s", s.effective_smc_s()}};
}

inline Json to_json(const RepRecord& r)
{
    return Json{{"rep", r.rep},
                {"recovery", r.recovery},
                {"avg_samples_amt", r.avg_samples_amt},
                {"avg_samples_smc", r.avg_samples_smc},
                {"avg_samples_fmc", r.avg_samples_fmc},
                {"fdp_amt", r.fdp_amt},
                {"fdp_fmc", r.fdp_fmc},
                {"discoveries_amt", r.discoveries_amt},
                {"discoveries_fmc", r.discoveries_fmc},
                {"discoveries_smc", r.discoveries_smc},
                {"rounds", r.rounds}};
}

inline Json to_json(const MeanSd& v) { return Json{{"mean", v.mean}, {"sd", v.sd}}; }

inline Json to_json(const Aggregates& a)
{
    return Json{{"reps", a.reps},
                {"recovery_rate", a.recovery_rate},
                {"samples_amt", to_json(a.samples_amt)},
                {"samples_smc", to_json(a.samples_smc)},
                {"samples_fmc", to_json(a.samples_fmc)},
                {"fdr_amt", a.fdr_amt},
                {"fdr_amt_se", a.fdr_amt_se},
                {"fdr_fmc", a.fdr_fmc},
                {"mean_discoveries_amt", a.mean_discoveries_amt},
                {"mean_discoveries_fmc", a.mean_discoveries_fmc},
                {"mean_discoveries_smc", a.mean_discoveries_smc}};
}

inline Json to_json(const ExperimentReport& report)
{
    Json j;
    j["experiment"] = report.experiment;
    j["spec"] = to_json(report.spec);
    if (!report.reps.empty()) {
        j["aggregates"] = to_json(report.aggregates);
        Json reps = Json::array();
        for (const auto& r : report.reps) {
            reps.push_back(to_json(r));
        }
        j["reps"] = std::move(reps);
    }
    if (!report.grid.empty()) {
        Json grid = Json::array();
        for (const auto& g : report.grid) {
            Json reps = Json::array();
            for (const auto& r : g.reps) {
                reps.push_back(to_json(r));
            }
            grid.push_back(Json{{"parameter", g.parameter},
                                {"value", g.value},
                                {"spec", to_json(g.spec)},
                                {"aggregates", to_json(g.aggregates)},
                                {"reps", std::move(reps)}});
        }
        j["grid"] = std::move(grid);
    }
    if (report.amt_slope) {
        j["amt_slope"] = *report.amt_slope;
    }
    if (report.smc_slope) {
        j["smc_slope"] = *report.smc_slope;
    }
    return j;
}

namespace detail {

inline std::string csv_number(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline void csv_rep_row(std::ostream& os, const RepRecord& r)
{
    os << r.rep << ',' << (r.recovery ? 1 : 0) << ',' << csv_number(r.avg_samples_amt) << ','
       << csv_number(r.avg_samples_smc) << ',' << csv_number(r.avg_samples_fmc) << ',' << csv_number(r.fdp_amt)
       << ',' << csv_number(r.fdp_fmc) << ',' << r.discoveries_amt << ',' << r.discoveries_fmc << ','
       << r.discoveries_smc << ',' << r.rounds << '\n';
}

inline constexpr const char* kRepColumns = "rep,recovery,avg_samples_amt,avg_samples_smc,avg_samples_fmc,fdp_amt,"
                                           "fdp_fmc,discoveries_amt,discoveries_fmc,discoveries_smc,rounds";

} // namespace detail

/// One row per repetition; grid experiments prefix each row with the grid
/// parameter and value.
inline std::string to_csv(const ExperimentReport& report)
{
    std::ostringstream os;
    if (report.grid.empty()) {
        os << detail::kRepColumns << '\n';
        for (const auto& r : report.reps) {
            detail::csv_rep_row(os, r);
        }
        return os.str();
    }
    os << "parameter,value," << detail::kRepColumns << '\n';
    for (const auto& g : report.grid) {
        for (const auto& r : g.reps) {
            os << g.parameter << ',' << detail::csv_number(g.value) << ',';
            detail::csv_rep_row(os, r);
        }
    }
    return os.str();
}

} // namespace amt
