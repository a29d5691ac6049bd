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

#include <hashfind/detail/parallel.hpp>
#include <hashfind/embedding_io.hpp>
#include <hashfind/encoder.hpp>
#include <hashfind/error.hpp>
#include <hashfind/index.hpp>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ranges>
#include <string>
#include <unordered_map>
#include <vector>

namespace hashfind {

/// Ranking depth used for AP: the full reference list, or only the top k.
class EvalDepth {
public:
    static EvalDepth full() { return EvalDepth(); }
    static EvalDepth top(std::size_t k) {
        if (k == 0) throw Error(ErrorCode::InvalidArgument, "evaluation depth must be >= 1");
        EvalDepth d;
        d.k_ = k;
        return d;
    }

    [[nodiscard]] bool is_full() const noexcept { return !k_.has_value(); }
    [[nodiscard]] std::optional<std::size_t> k() const noexcept { return k_; }
    [[nodiscard]] std::size_t resolve(std::size_t reference_count) const noexcept {
        return k_ ? std::min(*k_, reference_count) : reference_count;
    }
    [[nodiscard]] std::string to_string() const { return k_ ? std::to_string(*k_) : "full"; }

    friend bool operator==(const EvalDepth&, const EvalDepth&) = default;

private:
    EvalDepth() = default;
    std::optional<std::size_t> k_;
};

/// Rel(i) for i = 1..n: whether the reference at rank i shares the query's label.
using RelevanceVector = std::vector<bool>;

/// AP = (1/gtp) * sum_i precision(i) * rel(i), where precision(i) is the fraction of
/// relevant entries among ranks 1..i. gtp counts relevant items in the whole reference
/// set, so relevant items missing from a truncated ranking lower the score.
template <std::ranges::input_range R>
    requires std::convertible_to<std::ranges::range_reference_t<R>, bool>
double average_precision(const R& rel, std::size_t gtp) {
    if (gtp == 0) throw Error(ErrorCode::InvalidArgument, "average precision is undefined for zero ground-truth positives");
    double sum = 0.0;
    std::size_t hits = 0;
    std::size_t rank = 0;
    for (const bool relevant : rel) {
        ++rank;
        if (relevant) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(rank);
        }
    }
    return sum / static_cast<double>(gtp);
}

struct ApResult {
    std::string query_id;
    std::string label;
    std::optional<double> ap;  // absent when gtp == 0
    std::size_t gtp = 0;
    std::size_t depth = 0;
};

struct EvalReport {
    double map = 0.0;
    std::size_t n_queries_scored = 0;
    std::vector<ApResult> per_query;
    std::map<std::string, double> per_class_map;
    std::vector<std::string> excluded_queries;  // label absent from the reference set
    ThresholdPercentile percentile;
    EvalDepth depth = EvalDepth::full();
    std::size_t code_length = 0;
    std::size_t reference_count = 0;
    std::string reference_fingerprint;
};

/// Scores pre-encoded queries against the index. Queries whose label does not occur
/// among the references are reported in `excluded_queries` and left out of the mean.
inline EvalReport evaluate(const HashIndex& index, const CodeSet& queries, EvalDepth depth = EvalDepth::full(),
                           std::size_t threads = 1) {
    if (queries.code_length() != index.code_length()) {
        throw Error(ErrorCode::LengthMismatch, "query code length " + std::to_string(queries.code_length()) +
                                                   " != index code length " + std::to_string(index.code_length()));
    }
    if (queries.percentile() != index.percentile()) {
        throw Error(ErrorCode::InvalidArgument, "queries encoded at percentile " +
                                                    std::to_string(queries.percentile().value()) + ", index at " +
                                                    std::to_string(index.percentile().value()));
    }

    const auto& ref_labels = index.codeset().labels();
    std::unordered_map<std::string, std::size_t> label_counts;
    for (const auto& l : ref_labels) ++label_counts[l];

    const std::size_t n = depth.resolve(index.size());
    std::vector<ApResult> per_query(queries.size());
    detail::parallel_for(queries.size(), threads, [&](std::size_t j) {
        const auto& label = queries.labels()[j];
        ApResult& r = per_query[j];
        r.query_id = queries.ids()[j];
        r.label = label;
        r.depth = n;
        auto it = label_counts.find(label);
        r.gtp = it == label_counts.end() ? 0 : it->second;
        if (r.gtp == 0) return;
        const auto ranked = index.rank(queries.codes()[j], n);
        RelevanceVector rel(ranked.size());
        for (std::size_t i = 0; i < ranked.size(); ++i) rel[i] = ref_labels[ranked[i].position] == label;
        r.ap = average_precision(rel, r.gtp);
    });

    EvalReport report;
    report.percentile = index.percentile();
    report.depth = depth;
    report.code_length = index.code_length();
    report.reference_count = index.size();
    report.reference_fingerprint = index.fingerprint_hex();

    double total = 0.0;
    std::map<std::string, std::pair<double, std::size_t>> by_class;
    for (const auto& r : per_query) {
        if (!r.ap) {
            report.excluded_queries.push_back(r.query_id);
            continue;
        }
        total += *r.ap;
        ++report.n_queries_scored;
        auto& [sum, count] = by_class[r.label];
        sum += *r.ap;
        ++count;
    }
    if (report.n_queries_scored == 0) {
        throw Error(ErrorCode::NoScorableQuery, "no query label occurs in the reference set");
    }
    report.map = total / static_cast<double>(report.n_queries_scored);
    for (const auto& [label, acc] : by_class) report.per_class_map[label] = acc.first / static_cast<double>(acc.second);
    report.per_query = std::move(per_query);
    return report;
}

/// Encodes the query embeddings at the index's percentile, then scores them.
inline EvalReport evaluate(const HashIndex& index, const EmbeddingSet& queries, EvalDepth depth = EvalDepth::full(),
                           std::size_t threads = 1) {
    if (queries.dim() != index.code_length()) {
        throw Error(ErrorCode::DimensionMismatch, "query dimension " + std::to_string(queries.dim()) +
                                                      " != index code length " + std::to_string(index.code_length()));
    }
    return evaluate(index, encode_set(queries, index.percentile(), threads), depth, threads);
}

struct SweepPoint {
    ThresholdPercentile percentile;
    double map = 0.0;
};

struct SweepReport {
    std::vector<SweepPoint> points;                // ascending percentile
    std::vector<ThresholdPercentile> argmax;       // every percentile attaining the maximum
    double max_map = 0.0;
    EvalDepth depth = EvalDepth::full();
    std::size_t reference_count = 0;
    std::size_t query_count = 0;
};

/// mAP as a function of the encoding percentile. For each q both sides are
/// re-encoded, indexed and evaluated. Duplicate percentiles are collapsed.
inline SweepReport sweep(const EmbeddingSet& reference, const EmbeddingSet& queries,
                         std::vector<ThresholdPercentile> percentiles, EvalDepth depth = EvalDepth::full(),
                         std::size_t threads = 1) {
    if (percentiles.empty()) throw Error(ErrorCode::InvalidArgument, "percentile list is empty");
    if (reference.dim() != queries.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "reference dimension " + std::to_string(reference.dim()) +
                                                      " != query dimension " + std::to_string(queries.dim()));
    }
    std::sort(percentiles.begin(), percentiles.end());
    percentiles.erase(std::unique(percentiles.begin(), percentiles.end()), percentiles.end());

    SweepReport report;
    report.depth = depth;
    report.reference_count = reference.size();
    report.query_count = queries.size();
    report.points.resize(percentiles.size());
    detail::parallel_for(percentiles.size(), threads, [&](std::size_t i) {
        const auto q = percentiles[i];
        const auto index = HashIndex::build(encode_set(reference, q));
        report.points[i] = SweepPoint{q, evaluate(index, encode_set(queries, q), depth).map};
    });

    report.max_map = report.points.front().map;
    for (const auto& p : report.points) report.max_map = std::max(report.max_map, p.map);
    for (const auto& p : report.points) {
        if (p.map == report.max_map) report.argmax.push_back(p.percentile);
    }
    return report;
}

}  // namespace hashfind
