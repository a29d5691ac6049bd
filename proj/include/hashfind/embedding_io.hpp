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

#include <hashfind/detail/binary_io.hpp>
#include <hashfind/error.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace hashfind {

enum class SplitTag { train, validation, test, other };

inline std::string_view to_string(SplitTag tag) {
    switch (tag) {
        case SplitTag::train: return "train";
        case SplitTag::validation: return "validation";
        case SplitTag::test: return "test";
        case SplitTag::other: return "other";
    }
    return "other";
}

inline SplitTag parse_split_tag(std::string_view s) {
    if (s == "train") return SplitTag::train;
    if (s == "validation") return SplitTag::validation;
    if (s == "test") return SplitTag::test;
    if (s == "other") return SplitTag::other;
    throw Error(ErrorCode::InvalidArgument, "unknown split tag '" + std::string(s) + "'");
}

struct EmbeddingRecord {
    std::string id;
    std::string label;
    std::vector<double> vector;

    friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

/// A validated, immutable collection of labeled embeddings. Record order is the
/// canonical insertion order used for every downstream tie-break.
class EmbeddingSet {
public:
    EmbeddingSet(std::vector<EmbeddingRecord> records, std::size_t dim,
                 SplitTag split_tag = SplitTag::other, bool sigmoid_range = true)
        : records_(std::move(records)), dim_(dim), split_tag_(split_tag), sigmoid_range_(sigmoid_range) {
        validate();
    }

    [[nodiscard]] const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const EmbeddingRecord& operator[](std::size_t i) const { return records_.at(i); }
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] SplitTag split_tag() const noexcept { return split_tag_; }
    [[nodiscard]] bool sigmoid_range() const noexcept { return sigmoid_range_; }

    friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

private:
    void validate() const {
        if (dim_ == 0) throw Error(ErrorCode::InvalidArgument, "embedding dimension must be >= 1");
        std::unordered_set<std::string_view> seen;
        seen.reserve(records_.size());
        for (std::size_t i = 0; i < records_.size(); ++i) {
            const auto& r = records_[i];
            if (r.id.empty()) throw Error(ErrorCode::MalformedRow, "record " + std::to_string(i) + " has an empty id");
            if (r.vector.size() != dim_) {
                throw Error(ErrorCode::DimensionMismatch, "record '" + r.id + "' has " + std::to_string(r.vector.size()) +
                                                              " components, expected " + std::to_string(dim_));
            }
            if (!seen.insert(r.id).second) throw Error(ErrorCode::DuplicateId, "duplicate id '" + r.id + "'");
            for (std::size_t j = 0; j < dim_; ++j) {
                const double v = r.vector[j];
                if (!std::isfinite(v)) {
                    throw Error(ErrorCode::MalformedRow, "record '" + r.id + "' component " + std::to_string(j) + " is not finite");
                }
                if (sigmoid_range_ && (v < 0.0 || v > 1.0)) {
                    throw Error(ErrorCode::OutOfRange, "record '" + r.id + "' component " + std::to_string(j) +
                                                           " = " + std::to_string(v) + " outside [0,1]");
                }
            }
        }
    }

    std::vector<EmbeddingRecord> records_;
    std::size_t dim_;
    SplitTag split_tag_;
    bool sigmoid_range_;
};

enum class EmbeddingFormat { csv, binary };

struct LoadOptions {
    SplitTag split_tag = SplitTag::other;
    bool sigmoid_range = true;
};

inline constexpr std::array<char, 4> kEmbeddingMagic{'E', 'M', 'B', '1'};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline std::optional<double> parse_double(std::string_view s) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return value;
}

// Shortest representation that parses back to the identical double.
inline void append_double(std::string& out, double value) {
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    out.append(buf.data(), ptr);
}

inline void check_csv_text(std::string_view field, std::string_view what) {
    if (field.find_first_of(",\r\n") != std::string_view::npos) {
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " '" + std::string(field) +
                                                    "' contains a comma or newline and cannot be written as CSV");
    }
}

}  // namespace detail

inline EmbeddingSet parse_embeddings_csv(std::string_view text, const LoadOptions& options = {}) {
    if (text.empty()) throw Error(ErrorCode::EmptyInput, "embedding file is empty");
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw Error(ErrorCode::EmptyInput, "embedding file has no header");

    auto header = detail::split_fields(lines.front());
    if (header.size() < 3 || header[0] != "id" || header[1] != "label") {
        throw Error(ErrorCode::MalformedRow, "header must be 'id,label,e0,...'");
    }
    const std::size_t dim = header.size() - 2;
    for (std::size_t j = 0; j < dim; ++j) {
        if (header[j + 2] != "e" + std::to_string(j)) {
            throw Error(ErrorCode::MalformedRow, "header column " + std::to_string(j + 2) + " should be 'e" +
                                                     std::to_string(j) + "', got '" + std::string(header[j + 2]) + "'");
        }
    }

    std::vector<EmbeddingRecord> records;
    records.reserve(lines.size() - 1);
    for (std::size_t row = 1; row < lines.size(); ++row) {
        auto fields = detail::split_fields(lines[row]);
        const auto where = "line " + std::to_string(row + 1);
        if (fields.size() != dim + 2) {
            throw Error(ErrorCode::MalformedRow, where + ": expected " + std::to_string(dim + 2) + " fields, got " +
                                                     std::to_string(fields.size()));
        }
        EmbeddingRecord rec{std::string(fields[0]), std::string(fields[1]), {}};
        rec.vector.reserve(dim);
        for (std::size_t j = 0; j < dim; ++j) {
            auto value = detail::parse_double(fields[j + 2]);
            if (!value) {
                throw Error(ErrorCode::MalformedRow, where + ": non-numeric component '" + std::string(fields[j + 2]) + "'");
            }
            rec.vector.push_back(*value);
        }
        records.push_back(std::move(rec));
    }
    return EmbeddingSet(std::move(records), dim, options.split_tag, options.sigmoid_range);
}

inline std::string format_embeddings_csv(const EmbeddingSet& set) {
    std::string out = "id,label";
    for (std::size_t j = 0; j < set.dim(); ++j) out += ",e" + std::to_string(j);
    out += '\n';
    for (const auto& r : set.records()) {
        detail::check_csv_text(r.id, "id");
        detail::check_csv_text(r.label, "label");
        out += r.id;
        out += ',';
        out += r.label;
        for (double v : r.vector) {
            out += ',';
            detail::append_double(out, v);
        }
        out += '\n';
    }
    return out;
}

inline EmbeddingSet parse_embeddings_binary(std::string_view data, const LoadOptions& options = {}) {
    if (data.empty()) throw Error(ErrorCode::EmptyInput, "embedding file is empty");
    detail::ByteReader in(data);
    auto magic = in.get_bytes(4);
    if (magic != std::string_view(kEmbeddingMagic.data(), kEmbeddingMagic.size())) {
        throw Error(ErrorCode::BadMagic, "not an EMB1 embedding file");
    }
    const auto dim = in.get<std::uint32_t>();
    const auto count = in.get<std::uint64_t>();
    // Each record needs at least 8 bytes of length prefixes plus its components.
    if (count > in.remaining() / (8 + 8 * static_cast<std::uint64_t>(dim))) {
        throw Error(ErrorCode::Truncated, "record count " + std::to_string(count) + " exceeds file size");
    }
    std::vector<EmbeddingRecord> records;
    records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        EmbeddingRecord rec;
        rec.id = in.get_string();
        rec.label = in.get_string();
        rec.vector.resize(dim);
        for (auto& v : rec.vector) v = in.get_f64();
        records.push_back(std::move(rec));
    }
    if (in.remaining() != 0) throw Error(ErrorCode::MalformedRow, "trailing bytes after last record");
    return EmbeddingSet(std::move(records), dim, options.split_tag, options.sigmoid_range);
}

inline std::string format_embeddings_binary(const EmbeddingSet& set) {
    detail::ByteWriter out;
    out.put_bytes(std::string_view(kEmbeddingMagic.data(), kEmbeddingMagic.size()));
    out.put(static_cast<std::uint32_t>(set.dim()));
    out.put(static_cast<std::uint64_t>(set.size()));
    for (const auto& r : set.records()) {
        out.put_string(r.id);
        out.put_string(r.label);
        for (double v : r.vector) out.put_f64(v);
    }
    return out.take();
}

/// Sniffs the leading magic; anything that is not EMB1 is treated as CSV.
inline EmbeddingFormat detect_embedding_format(std::string_view data) {
    return data.starts_with(std::string_view(kEmbeddingMagic.data(), kEmbeddingMagic.size())) ? EmbeddingFormat::binary
                                                                                               : EmbeddingFormat::csv;
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path, EmbeddingFormat format,
                                    const LoadOptions& options = {}) {
    const auto data = detail::read_file(path);
    return format == EmbeddingFormat::csv ? parse_embeddings_csv(data, options)
                                          : parse_embeddings_binary(data, options);
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path, const LoadOptions& options = {}) {
    const auto data = detail::read_file(path);
    return detect_embedding_format(data) == EmbeddingFormat::csv ? parse_embeddings_csv(data, options)
                                                                 : parse_embeddings_binary(data, options);
}

inline void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path, EmbeddingFormat format) {
    detail::write_file_atomic(path, format == EmbeddingFormat::csv ? format_embeddings_csv(set)
                                                                   : format_embeddings_binary(set));
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticParams {
    std::size_t num_classes = 4;
    std::size_t per_class = 50;
    std::size_t dim = 8;
    double separation = 6.0;
    double noise = 0.2;
    std::uint64_t seed = 42;
};

/// Clustered embeddings in (0,1)^dim that mimic a sigmoid hash head. Each class gets
/// a bit-balanced sign pattern (ceil(dim/2) components +1, the rest -1, randomly
/// placed, distinct across classes while distinct patterns remain) scaled by
/// `separation`; each sample is that center plus N(0, noise^2) per component, passed
/// through the logistic function. Records are class-major: class0 samples first.
inline EmbeddingSet generate_synthetic(const SyntheticParams& p) {
    if (p.num_classes == 0) throw Error(ErrorCode::InvalidArgument, "num_classes must be >= 1");
    if (p.per_class == 0) throw Error(ErrorCode::InvalidArgument, "per_class must be >= 1");
    if (p.dim == 0) throw Error(ErrorCode::InvalidArgument, "dim must be >= 1");
    if (!(p.separation >= 0.0) || !(p.noise >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "separation and noise must be >= 0");
    }
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> unit(0.0, 1.0);

    // Number of distinct balanced patterns, C(dim, ceil(dim/2)), saturated.
    const std::size_t ones = (p.dim + 1) / 2;
    std::uint64_t available = 1;
    for (std::size_t i = 1; i <= ones && available < (std::uint64_t{1} << 40); ++i) {
        available = available * (p.dim - ones + i) / i;
    }

    std::set<std::vector<double>> used;
    std::vector<std::vector<double>> centers;
    centers.reserve(p.num_classes);
    for (std::size_t c = 0; c < p.num_classes; ++c) {
        std::vector<double> signs(p.dim, -1.0);
        std::fill_n(signs.begin(), ones, 1.0);
        do {
            std::shuffle(signs.begin(), signs.end(), rng);
        } while (used.size() < available && used.contains(signs));
        used.insert(signs);
        for (auto& s : signs) s *= p.separation;
        centers.push_back(std::move(signs));
    }

    std::vector<EmbeddingRecord> records;
    records.reserve(p.num_classes * p.per_class);
    std::size_t next_id = 0;
    for (std::size_t c = 0; c < p.num_classes; ++c) {
        for (std::size_t s = 0; s < p.per_class; ++s) {
            EmbeddingRecord rec{"s" + std::to_string(next_id++), "class" + std::to_string(c), {}};
            rec.vector.reserve(p.dim);
            for (std::size_t j = 0; j < p.dim; ++j) {
                const double x = centers[c][j] + p.noise * unit(rng);
                rec.vector.push_back(1.0 / (1.0 + std::exp(-x)));
            }
            records.push_back(std::move(rec));
        }
    }
    return EmbeddingSet(std::move(records), p.dim, SplitTag::other, true);
}

/// Splits a set into (reference, query): the first `reference_per_class` records of
/// each label go to the reference side, the rest to the query side. Relative order is kept.
inline std::pair<EmbeddingSet, EmbeddingSet> split_by_class_quota(const EmbeddingSet& set,
                                                                  std::size_t reference_per_class) {
    std::map<std::string, std::size_t, std::less<>> taken;
    std::vector<EmbeddingRecord> reference;
    std::vector<EmbeddingRecord> query;
    for (const auto& r : set.records()) {
        auto& n = taken[r.label];
        if (n < reference_per_class) {
            reference.push_back(r);
            ++n;
        } else {
            query.push_back(r);
        }
    }
    return {EmbeddingSet(std::move(reference), set.dim(), SplitTag::train, set.sigmoid_range()),
            EmbeddingSet(std::move(query), set.dim(), SplitTag::test, set.sigmoid_range())};
}

// ---------------------------------------------------------------------------
// Dataset manifests

struct SplitCounts {
    std::uint64_t train = 0;
    std::uint64_t validation = 0;
    std::uint64_t test = 0;

    [[nodiscard]] std::uint64_t total() const noexcept { return train + validation + test; }
    friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

/// Per-class sample counts for each split. Totals are derived, never stored
/// independently, so they always equal the per-class sums.
class DatasetManifest {
public:
    DatasetManifest() = default;
    explicit DatasetManifest(std::vector<std::pair<std::string, SplitCounts>> classes) : classes_(std::move(classes)) {
        std::unordered_set<std::string_view> seen;
        for (const auto& [label, counts] : classes_) {
            if (label.empty()) throw Error(ErrorCode::InvalidArgument, "manifest class label is empty");
            if (!seen.insert(label).second) throw Error(ErrorCode::DuplicateId, "duplicate manifest class '" + label + "'");
        }
    }

    [[nodiscard]] const std::vector<std::pair<std::string, SplitCounts>>& classes() const noexcept { return classes_; }

    [[nodiscard]] SplitCounts totals() const noexcept {
        SplitCounts t;
        for (const auto& [label, c] : classes_) {
            t.train += c.train;
            t.validation += c.validation;
            t.test += c.test;
        }
        return t;
    }

    [[nodiscard]] std::optional<SplitCounts> counts(std::string_view label) const {
        for (const auto& [l, c] : classes_) {
            if (l == label) return c;
        }
        return std::nullopt;
    }

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;

private:
    std::vector<std::pair<std::string, SplitCounts>> classes_;
};

/// Manifest CSV: header `label,train,validation,test`, one row per class, optional
/// trailing `Total` row that must match the per-class sums.
inline DatasetManifest parse_manifest_csv(std::string_view text) {
    if (text.empty()) throw Error(ErrorCode::EmptyInput, "manifest is empty");
    std::vector<std::pair<std::string, SplitCounts>> classes;
    std::optional<SplitCounts> declared_total;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool header_seen = false;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto fields = detail::split_fields(line);
        if (!header_seen) {
            if (fields.size() != 4 || fields[0] != "label" || fields[1] != "train" || fields[2] != "validation" ||
                fields[3] != "test") {
                throw Error(ErrorCode::MalformedRow, "manifest header must be 'label,train,validation,test'");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != 4) throw Error(ErrorCode::MalformedRow, "manifest line " + std::to_string(line_no));
        std::array<std::uint64_t, 3> n{};
        for (std::size_t i = 0; i < 3; ++i) {
            auto f = fields[i + 1];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), n[i]);
            if (ec != std::errc{} || ptr != f.data() + f.size() || f.empty()) {
                throw Error(ErrorCode::MalformedRow, "manifest line " + std::to_string(line_no) + ": bad count '" +
                                                         std::string(f) + "'");
            }
        }
        SplitCounts counts{n[0], n[1], n[2]};
        if (fields[0] == "Total") {
            declared_total = counts;
        } else {
            classes.emplace_back(std::string(fields[0]), counts);
        }
    }
    if (!header_seen) throw Error(ErrorCode::EmptyInput, "manifest has no header");
    DatasetManifest manifest(std::move(classes));
    if (declared_total && *declared_total != manifest.totals()) {
        throw Error(ErrorCode::MalformedRow, "manifest Total row does not equal the per-class sums");
    }
    return manifest;
}

inline std::string format_manifest_csv(const DatasetManifest& m) {
    std::string out = "label,train,validation,test\n";
    auto row = [&out](std::string_view label, const SplitCounts& c) {
        out += label;
        out += ',' + std::to_string(c.train) + ',' + std::to_string(c.validation) + ',' + std::to_string(c.test) + '\n';
    };
    for (const auto& [label, c] : m.classes()) {
        detail::check_csv_text(label, "label");
        row(label, c);
    }
    row("Total", m.totals());
    return out;
}

/// Original radio-galaxy split distribution (Bent, Compact, FRI, FRII).
inline DatasetManifest radio_galaxy_manifest() {
    return DatasetManifest({
        {"Bent", {305, 100, 103}},
        {"Compact", {226, 80, 100}},
        {"FRI", {215, 74, 100}},
        {"FRII", {434, 144, 101}},
    });
}

/// Per-class sizes after upsampling the train and validation splits (2708 in total).
inline std::vector<std::pair<std::string, std::uint64_t>> radio_galaxy_balanced_counts() {
    return {{"Compact", 675}, {"FRI", 674}, {"FRII", 679}, {"Bent", 680}};
}

}  // namespace hashfind
