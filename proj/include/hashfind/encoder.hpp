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
#include <hashfind/error.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hashfind {

inline constexpr std::size_t kMaxCodeLength = 4096;
inline constexpr std::size_t kDefaultCodeLength = 8;

/// A percentile in [0, 100].
class ThresholdPercentile {
public:
    constexpr ThresholdPercentile() = default;
    explicit ThresholdPercentile(double q) : q_(q) {
        if (!(q >= 0.0 && q <= 100.0)) {
            throw Error(ErrorCode::InvalidArgument, "threshold percentile " + std::to_string(q) + " outside [0,100]");
        }
    }

    [[nodiscard]] constexpr double value() const noexcept { return q_; }

    friend constexpr auto operator<=>(const ThresholdPercentile&, const ThresholdPercentile&) = default;

private:
    double q_ = 50.0;
};

/// L-bit hash code packed little-endian into 64-bit words: bit i lives in
/// word i / 64 at position i % 64. Padding bits past L are always zero.
class BinaryCode {
public:
    BinaryCode() = default;

    explicit BinaryCode(std::size_t length) : length_(length), words_(word_count(length), 0) {
        if (length == 0 || length > kMaxCodeLength) {
            throw Error(ErrorCode::InvalidArgument, "code length " + std::to_string(length) + " outside [1," +
                                                        std::to_string(kMaxCodeLength) + "]");
        }
    }

    BinaryCode(std::size_t length, std::span<const std::uint64_t> words) : BinaryCode(length) {
        if (words.size() != words_.size()) {
            throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(words_.size()) + " code words, got " +
                                                       std::to_string(words.size()));
        }
        std::copy(words.begin(), words.end(), words_.begin());
        if (const auto tail = length_ % 64; tail != 0 && (words_.back() >> tail) != 0) {
            throw Error(ErrorCode::InvalidArgument, "code has bits set beyond its length");
        }
    }

    /// Parses a bit string where character i is bit i, e.g. "10101010".
    static BinaryCode from_string(std::string_view bits) {
        BinaryCode code(bits.size());
        for (std::size_t i = 0; i < bits.size(); ++i) {
            if (bits[i] == '1') {
                code.set(i);
            } else if (bits[i] != '0') {
                throw Error(ErrorCode::InvalidArgument, "bit string may only contain '0' and '1'");
            }
        }
        return code;
    }

    static constexpr std::size_t word_count(std::size_t length) noexcept { return (length + 63) / 64; }

    [[nodiscard]] std::size_t length() const noexcept { return length_; }
    [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return words_; }

    [[nodiscard]] bool test(std::size_t i) const { return (words_.at(i / 64) >> (i % 64)) & 1U; }

    void set(std::size_t i) {
        if (i >= length_) throw Error(ErrorCode::InvalidArgument, "bit index out of range");
        words_[i / 64] |= std::uint64_t{1} << (i % 64);
    }

    [[nodiscard]] std::size_t popcount() const noexcept {
        std::size_t n = 0;
        for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
        return n;
    }

    [[nodiscard]] std::string to_string() const {
        std::string s(length_, '0');
        for (std::size_t i = 0; i < length_; ++i) {
            if (test(i)) s[i] = '1';
        }
        return s;
    }

    friend bool operator==(const BinaryCode&, const BinaryCode&) = default;

private:
    std::size_t length_ = 0;
    std::vector<std::uint64_t> words_;
};

/// The q-th percentile of `values` with linear interpolation between order
/// statistics: h = (D-1) q / 100, result = x[floor h] + frac(h) (x[floor h + 1] - x[floor h])
/// on the ascending sort. q = 50 gives the median.
inline double percentile_threshold(std::span<const double> values, ThresholdPercentile q) {
    if (values.empty()) throw Error(ErrorCode::EmptyInput, "cannot take a percentile of an empty vector");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = static_cast<double>(sorted.size() - 1) * q.value() / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || lo + 1 >= sorted.size()) return sorted[lo];
    // std::lerp stays within [x_lo, x_hi] and is monotone in frac, which keeps
    // popcount monotone in q.
    return std::lerp(sorted[lo], sorted[lo + 1], frac);
}

/// Bit i is set iff values[i] >= the vector's own q-th percentile.
inline BinaryCode binarize(std::span<const double> values, ThresholdPercentile q) {
    const double threshold = percentile_threshold(values, q);
    BinaryCode code(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= threshold) code.set(i);
    }
    return code;
}

/// Codes plus the ids and labels they were produced from, in insertion order.
class CodeSet {
public:
    CodeSet(std::vector<BinaryCode> codes, std::vector<std::string> ids, std::vector<std::string> labels,
            std::size_t code_length, ThresholdPercentile percentile)
        : codes_(std::move(codes)), ids_(std::move(ids)), labels_(std::move(labels)), code_length_(code_length),
          percentile_(percentile) {
        if (code_length_ == 0 || code_length_ > kMaxCodeLength) {
            throw Error(ErrorCode::InvalidArgument, "code length " + std::to_string(code_length_) + " unsupported");
        }
        if (codes_.size() != ids_.size() || codes_.size() != labels_.size()) {
            throw Error(ErrorCode::InvalidArgument, "codes, ids and labels must have equal length");
        }
        for (const auto& c : codes_) {
            if (c.length() != code_length_) {
                throw Error(ErrorCode::LengthMismatch, "code of length " + std::to_string(c.length()) + " in a set of length " +
                                                           std::to_string(code_length_));
            }
        }
    }

    [[nodiscard]] const std::vector<BinaryCode>& codes() const noexcept { return codes_; }
    [[nodiscard]] const std::vector<std::string>& ids() const noexcept { return ids_; }
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    [[nodiscard]] std::size_t code_length() const noexcept { return code_length_; }
    [[nodiscard]] ThresholdPercentile percentile() const noexcept { return percentile_; }
    [[nodiscard]] std::size_t size() const noexcept { return codes_.size(); }
    [[nodiscard]] bool empty() const noexcept { return codes_.empty(); }

    friend bool operator==(const CodeSet&, const CodeSet&) = default;

private:
    std::vector<BinaryCode> codes_;
    std::vector<std::string> ids_;
    std::vector<std::string> labels_;
    std::size_t code_length_;
    ThresholdPercentile percentile_;
};

/// Binarizes every record at percentile q. Output order matches record order for
/// any thread count.
inline CodeSet encode_set(const EmbeddingSet& set, ThresholdPercentile q, std::size_t threads = 1) {
    if (set.empty()) throw Error(ErrorCode::EmptyInput, "cannot encode an empty embedding set");
    std::vector<BinaryCode> codes(set.size());
    detail::parallel_for(set.size(), threads, [&](std::size_t i) { codes[i] = binarize(set[i].vector, q); });
    std::vector<std::string> ids;
    std::vector<std::string> labels;
    ids.reserve(set.size());
    labels.reserve(set.size());
    for (const auto& r : set.records()) {
        ids.push_back(r.id);
        labels.push_back(r.label);
    }
    return CodeSet(std::move(codes), std::move(ids), std::move(labels), set.dim(), q);
}

}  // namespace hashfind
