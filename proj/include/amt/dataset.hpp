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
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "amt/sample_source.hpp"

namespace amt {

class DatasetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Minimal RFC 4180 field splitter: commas, double-quoted fields, "" escapes.
inline std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (quoted) {
        throw DatasetError("unterminated quoted field");
    }
    fields.push_back(std::move(field));
    return fields;
}

inline std::optional<double> parse_real(const std::string& s)
{
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    while (first < last && *first == ' ') {
        ++first;
    }
    while (last > first && *(last - 1) == ' ') {
        --last;
    }
    if (first == last) {
        return std::nullopt;
    }
    if (*first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

struct InputColumn {
    std::string name;
    std::vector<std::string> values; // raw cell text
    std::vector<bool> missing;
    double missing_fraction = 0.0;
    bool numeric = false;  // every non-missing cell parses as a real
    bool integral = false; // ... and every one of them is an integer

    /// Real inputs get Pearson correlation; categorical ones (including
    /// integer genotype codes) get chi-squared.
    StatisticKind default_statistic() const
    {
        return numeric && !integral ? StatisticKind::pearson_correlation : StatisticKind::chi_squared;
    }
};

struct Dataset {
    std::string response_name;
    std::vector<std::string> response;
    std::vector<InputColumn> inputs;
    std::vector<std::string> dropped_columns;
    std::size_t dropped_rows = 0; // rows removed for a missing response

    std::size_t rows() const noexcept { return response.size(); }
};

inline InputColumn classify_column(std::string name, std::vector<std::string> values, const std::string& missing_marker)
{
    InputColumn col;
    col.name = std::move(name);
    col.values = std::move(values);
    col.missing.resize(col.values.size());
    std::size_t missing = 0;
    bool numeric = true;
    bool integral = true;
    for (std::size_t i = 0; i < col.values.size(); ++i) {
        if (col.values[i] == missing_marker || col.values[i].empty()) {
            col.missing[i] = true;
            ++missing;
            continue;
        }
        const auto v = parse_real(col.values[i]);
        if (!v) {
            numeric = false;
        } else if (*v != std::floor(*v)) {
            integral = false;
        }
    }
    col.missing_fraction = col.values.empty() ? 0.0 : static_cast<double>(missing) / static_cast<double>(col.values.size());
    col.numeric = numeric;
    col.integral = numeric && integral;
    return col;
}

/// Reads a header-first CSV. Rows whose response is missing are removed
/// everywhere; input columns with a missing fraction above the threshold
/// (or with fewer than two observed values) are dropped and listed.
inline Dataset parse_dataset(std::istream& in, const std::string& response_column, double missing_threshold,
                             const std::string& missing_marker = "NA")
{
    if (!(missing_threshold >= 0.0 && missing_threshold <= 1.0)) {
        throw DatasetError("missing threshold must lie in [0, 1]");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DatasetError("empty file: a header row is required");
    }
    const auto header = split_csv_line(line);
    const auto response_it = std::find(header.begin(), header.end(), response_column);
    if (response_it == header.end()) {
        throw DatasetError("response column '" + response_column + "' not found in header");
    }
    const auto response_index = static_cast<std::size_t>(response_it - header.begin());

    std::vector<std::vector<std::string>> cells(header.size());
    std::size_t line_no = 1;
    Dataset ds;
    ds.response_name = response_column;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw DatasetError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                               " fields, found " + std::to_string(fields.size()));
        }
        const auto& y = fields[response_index];
        if (y.empty() || y == missing_marker) {
            ++ds.dropped_rows;
            continue;
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            cells[c].push_back(std::move(fields[c]));
        }
    }
    ds.response = std::move(cells[response_index]);
    if (ds.response.size() < 2) {
        throw DatasetError("need at least two rows with an observed response");
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == response_index) {
            continue;
        }
        auto col = classify_column(header[c], std::move(cells[c]), missing_marker);
        const auto observed = static_cast<std::size_t>(std::count(col.missing.begin(), col.missing.end(), false));
        if (col.missing_fraction > missing_threshold || observed < 2) {
            ds.dropped_columns.push_back(col.name);
            continue;
        }
        ds.inputs.push_back(std::move(col));
    }
    if (ds.inputs.empty()) {
        throw DatasetError("no input columns left after missing-value filtering");
    }
    return ds;
}

inline Dataset load_dataset(const std::string& path, const std::string& response_column, double missing_threshold,
                            const std::string& missing_marker = "NA")
{
    std::ifstream in(path);
    if (!in) {
        throw DatasetError("cannot open '" + path + "'");
    }
    return parse_dataset(in, response_column, missing_threshold, missing_marker);
}

namespace detail {

/// Numeric values if every entry parses, else sorted category codes.
inline std::vector<double> encode_values(const std::vector<std::string>& values, bool numeric)
{
    std::vector<double> out;
    out.reserve(values.size());
    if (numeric) {
        for (const auto& v : values) {
            out.push_back(*parse_real(v));
        }
        return out;
    }
    std::map<std::string, double> codes;
    for (const auto& v : values) {
        codes.emplace(v, 0.0);
    }
    double next = 0.0;
    for (auto& [label, code] : codes) {
        code = next++;
    }
    for (const auto& v : values) {
        out.push_back(codes.at(v));
    }
    return out;
}

} // namespace detail

/// Builds one permutation arm per retained column over that column's
/// complete rows. `statistic` overrides the per-column default.
inline std::vector<std::shared_ptr<const PermutationArm>> make_arms(const Dataset& ds,
                                                                   std::optional<StatisticKind> statistic = {})
{
    std::vector<std::shared_ptr<const PermutationArm>> arms;
    arms.reserve(ds.inputs.size());
    for (const auto& col : ds.inputs) {
        const auto kind = statistic.value_or(col.default_statistic());
        std::vector<std::string> xs, ys;
        for (std::size_t r = 0; r < ds.rows(); ++r) {
            if (!col.missing[r]) {
                xs.push_back(col.values[r]);
                ys.push_back(ds.response[r]);
            }
        }
        if (kind == StatisticKind::pearson_correlation && !col.numeric) {
            throw DatasetError("column '" + col.name + "' is not numeric; pearson statistic needs real inputs");
        }
        const bool y_numeric = std::all_of(ys.begin(), ys.end(), [](const std::string& s) { return parse_real(s).has_value(); });
        auto x = detail::encode_values(xs, kind == StatisticKind::pearson_correlation || col.numeric);
        auto y = detail::encode_values(ys, y_numeric);
        arms.push_back(std::make_shared<const PermutationArm>(make_permutation_arm(std::move(x), std::move(y), kind)));
    }
    return arms;
}

} // namespace amt
