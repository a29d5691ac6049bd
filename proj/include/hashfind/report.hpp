// Copyright 2026-present the hashfind project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <hashfind/embedding_io.hpp>
#include <hashfind/eval.hpp>
#include <hashfind/index.hpp>

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace hashfind {

namespace detail {

inline nlohmann::json depth_json(const EvalDepth& depth) {
    if (depth.is_full()) return "full";
    return *depth.k();
}

}  // namespace detail

inline nlohmann::json to_json(const EvalReport& r) {
    nlohmann::json per_query = nlohmann::json::array();
    for (const auto& q : r.per_query) {
        per_query.push_back({
            {"query_id", q.query_id},
            {"label", q.label},
            {"ap", q.ap ? nlohmann::json(*q.ap) : nlohmann::json(nullptr)},
            {"gtp", q.gtp},
            {"depth", q.depth},
        });
    }
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [label, map] : r.per_class_map) per_class[label] = map;
    return {
        {"kind", "eval_report"},
        {"map", r.map},
        {"n_queries_scored", r.n_queries_scored},
        {"n_queries_excluded", r.excluded_queries.size()},
        {"percentile", r.percentile.value()},
        {"depth", detail::depth_json(r.depth)},
        {"code_length", r.code_length},
        {"reference_count", r.reference_count},
        {"reference_fingerprint", r.reference_fingerprint},
        {"per_class_map", per_class},
        {"per_query", per_query},
        {"excluded_queries", r.excluded_queries},
    };
}

inline nlohmann::json to_json(const SweepReport& r) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.points) points.push_back({{"percentile", p.percentile.value()}, {"map", p.map}});
    nlohmann::json argmax = nlohmann::json::array();
    for (const auto& q : r.argmax) argmax.push_back(q.value());
    return {
        {"kind", "sweep_report"},
        {"depth", detail::depth_json(r.depth)},
        {"reference_count", r.reference_count},
        {"query_count", r.query_count},
        {"max_map", r.max_map},
        {"argmax", argmax},
        {"points", points},
    };
}

/// `percentile,map`, one row per sweep point.
inline std::string format_sweep_csv(const SweepReport& r) {
    std::string out = "percentile,map\n";
    for (const auto& p : r.points) {
        detail::append_double(out, p.percentile.value());
        out += ',';
        detail::append_double(out, p.map);
        out += '\n';
    }
    return out;
}

/// `query_id,label,ap,gtp`; excluded queries carry an empty ap field.
inline std::string format_per_query_csv(const EvalReport& r) {
    std::string out = "query_id,label,ap,gtp\n";
    for (const auto& q : r.per_query) {
        out += q.query_id + ',' + q.label + ',';
        if (q.ap) detail::append_double(out, *q.ap);
        out += ',' + std::to_string(q.gtp) + '\n';
    }
    return out;
}

/// `query_id,rank,reference_id,reference_label,distance` with ranks starting at 1.
inline std::string format_query_csv(const std::vector<RetrievalResult>& results) {
    std::string out = "query_id,rank,reference_id,reference_label,distance\n";
    for (const auto& r : results) {
        for (std::size_t i = 0; i < r.hits.size(); ++i) {
            const auto& h = r.hits[i];
            out += r.query_id + ',' + std::to_string(i + 1) + ',' + h.reference_id + ',' + h.reference_label + ',' +
                   std::to_string(h.distance) + '\n';
        }
    }
    return out;
}

}  // namespace hashfind
