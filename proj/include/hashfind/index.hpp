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
#include <hashfind/detail/parallel.hpp>
#include <hashfind/encoder.hpp>
#include <hashfind/error.hpp>

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hashfind {

inline constexpr std::size_t kDefaultTopK = 100;
inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr std::array<char, 4> kIndexMagic{'H', 'I', 'D', 'X'};

using Fingerprint = std::array<std::uint8_t, 32>;

namespace detail {

inline std::uint32_t hamming_words(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) noexcept {
    std::uint32_t d = 0;
    for (std::size_t w = 0; w < words; ++w) d += static_cast<std::uint32_t>(std::popcount(a[w] ^ b[w]));
    return d;
}

inline Fingerprint sha256(std::string_view data) {
    Fingerprint digest{};
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1 || len != digest.size()) {
        throw Error(ErrorCode::Io, "SHA-256 computation failed");
    }
    return digest;
}

inline std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out += kDigits[b >> 4];
        out += kDigits[b & 0xF];
    }
    return out;
}

}  // namespace detail

/// Number of differing bit positions (XOR + popcount over the packed words).
inline std::uint32_t hamming(const BinaryCode& a, const BinaryCode& b) {
    if (a.length() != b.length()) {
        throw Error(ErrorCode::LengthMismatch, "hamming distance between codes of length " + std::to_string(a.length()) +
                                                   " and " + std::to_string(b.length()));
    }
    return detail::hamming_words(a.words().data(), b.words().data(), a.words().size());
}

/// Position (insertion index) of a reference code and its distance to the query.
struct RankedPosition {
    std::size_t position;
    std::uint32_t distance;

    friend bool operator==(const RankedPosition&, const RankedPosition&) = default;
};

struct Hit {
    std::string reference_id;
    std::string reference_label;
    std::uint32_t distance;
    std::size_t position;

    friend bool operator==(const Hit&, const Hit&) = default;
};

/// Hits sorted by ascending distance, ties by ascending insertion position.
struct RetrievalResult {
    std::string query_id;
    std::vector<Hit> hits;

    friend bool operator==(const RetrievalResult&, const RetrievalResult&) = default;
};

/// Immutable reference database answering exact top-k Hamming queries by linear scan.
/// Safe to share across threads once built.
class HashIndex {
public:
    /// Builds the index; throws EmptyInput for an empty code set.
    static HashIndex build(CodeSet codeset) {
        if (codeset.empty()) throw Error(ErrorCode::EmptyInput, "cannot build an index over an empty code set");
        return HashIndex(std::move(codeset));
    }

    [[nodiscard]] const CodeSet& codeset() const noexcept { return codeset_; }
    [[nodiscard]] std::size_t size() const noexcept { return codeset_.size(); }
    [[nodiscard]] std::size_t code_length() const noexcept { return codeset_.code_length(); }
    [[nodiscard]] ThresholdPercentile percentile() const noexcept { return codeset_.percentile(); }
    [[nodiscard]] const Fingerprint& fingerprint() const noexcept { return fingerprint_; }
    [[nodiscard]] std::string fingerprint_hex() const { return detail::to_hex(fingerprint_); }

    /// Distance from `code` to every reference, in insertion order.
    [[nodiscard]] std::vector<std::uint32_t> distances(const BinaryCode& code) const {
        check_length(code);
        const std::size_t n = size();
        std::vector<std::uint32_t> out(n);
        const std::uint64_t* q = code.words().data();
        if (words_per_code_ == 1) {
            const std::uint64_t qw = q[0];
            for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint32_t>(std::popcount(qw ^ words_[i]));
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                out[i] = detail::hamming_words(q, words_.data() + i * words_per_code_, words_per_code_);
            }
        }
        return out;
    }

    /// The first min(k, size) references under the (distance, position) order.
    /// Distances are bounded by L, so selection is a counting pass rather than a sort.
    [[nodiscard]] std::vector<RankedPosition> rank(const BinaryCode& code, std::size_t k) const {
        if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
        const auto dist = distances(code);
        const std::size_t n = dist.size();
        k = std::min(k, n);

        const std::size_t buckets = code_length() + 1;
        std::vector<std::size_t> counts(buckets, 0);
        for (auto d : dist) ++counts[d];

        // Keep whole buckets until k is reached; the cutoff bucket is truncated.
        std::vector<std::size_t> offset(buckets, 0);
        std::size_t kept = 0;
        std::size_t cutoff = 0;
        for (; cutoff < buckets; ++cutoff) {
            offset[cutoff] = kept;
            if (kept + counts[cutoff] >= k) {
                counts[cutoff] = k - kept;
                break;
            }
            kept += counts[cutoff];
        }

        std::vector<RankedPosition> out(k);
        for (std::size_t i = 0; i < n; ++i) {
            const auto d = dist[i];
            if (d > cutoff || counts[d] == 0) continue;
            --counts[d];
            out[offset[d]++] = RankedPosition{i, d};
        }
        return out;
    }

    [[nodiscard]] RetrievalResult query(const BinaryCode& code, std::size_t k = kDefaultTopK,
                                        std::string query_id = {}) const {
        RetrievalResult result{std::move(query_id), {}};
        const auto ranked = rank(code, k);
        result.hits.reserve(ranked.size());
        for (const auto& r : ranked) {
            result.hits.push_back(Hit{codeset_.ids()[r.position], codeset_.labels()[r.position], r.distance, r.position});
        }
        return result;
    }

    /// result[i] == query(queries.codes()[i], k, queries.ids()[i]) for every thread count.
    [[nodiscard]] std::vector<RetrievalResult> batch_query(const CodeSet& queries, std::size_t k = kDefaultTopK,
                                                           std::size_t threads = 1) const {
        if (queries.code_length() != code_length()) {
            throw Error(ErrorCode::LengthMismatch, "query code length " + std::to_string(queries.code_length()) +
                                                       " != index code length " + std::to_string(code_length()));
        }
        std::vector<RetrievalResult> results(queries.size());
        detail::parallel_for(queries.size(), threads, [&](std::size_t i) {
            results[i] = query(queries.codes()[i], k, queries.ids()[i]);
        });
        return results;
    }

    [[nodiscard]] std::string to_bytes() const {
        detail::ByteWriter out;
        out.put_bytes(std::string_view(kIndexMagic.data(), kIndexMagic.size()));
        out.put(kIndexVersion);
        out.put_bytes(content_header());
        out.put_bytes(std::string_view(reinterpret_cast<const char*>(fingerprint_.data()), fingerprint_.size()));
        out.put_bytes(content_entries());
        return out.take();
    }

    /// Parses an index file image. The fingerprint is checked before the entries are
    /// decoded, so any corrupted byte after the version field reports FingerprintMismatch.
    static HashIndex from_bytes(std::string_view data) {
        detail::ByteReader in(data);
        if (in.get_bytes(kIndexMagic.size()) != std::string_view(kIndexMagic.data(), kIndexMagic.size())) {
            throw Error(ErrorCode::BadMagic, "not a HIDX index file");
        }
        const auto version = in.get<std::uint32_t>();
        if (version != kIndexVersion) {
            throw Error(ErrorCode::VersionMismatch, "index version " + std::to_string(version) + ", expected " +
                                                        std::to_string(kIndexVersion));
        }
        const auto header = in.get_bytes(4 + 8 + 8);
        Fingerprint stored{};
        const auto fp = in.get_bytes(stored.size());
        std::copy(fp.begin(), fp.end(), reinterpret_cast<char*>(stored.data()));
        const auto entries = data.substr(in.position());

        std::string content(header);
        content.append(entries);
        if (detail::sha256(content) != stored) {
            throw Error(ErrorCode::FingerprintMismatch, "index content does not match its fingerprint (corrupt or truncated)");
        }

        detail::ByteReader h(header);
        const auto length = h.get<std::uint32_t>();
        const ThresholdPercentile q(h.get_f64());
        const auto count = h.get<std::uint64_t>();
        const std::size_t words = BinaryCode::word_count(length);
        detail::ByteReader e(entries);
        if (count > e.remaining() / (8 + 8 * words)) throw Error(ErrorCode::Truncated, "entry count exceeds file size");

        std::vector<BinaryCode> codes;
        std::vector<std::string> ids;
        std::vector<std::string> labels;
        codes.reserve(count);
        ids.reserve(count);
        labels.reserve(count);
        std::vector<std::uint64_t> buf(words);
        for (std::uint64_t i = 0; i < count; ++i) {
            ids.push_back(e.get_string());
            labels.push_back(e.get_string());
            for (auto& w : buf) w = e.get<std::uint64_t>();
            codes.emplace_back(length, buf);
        }
        if (e.remaining() != 0) throw Error(ErrorCode::Truncated, "trailing bytes after last index entry");
        auto index = build(CodeSet(std::move(codes), std::move(ids), std::move(labels), length, q));
        if (index.fingerprint_ != stored) throw Error(ErrorCode::FingerprintMismatch, "fingerprint mismatch after decode");
        return index;
    }

    void serialize(const std::filesystem::path& path) const { detail::write_file_atomic(path, to_bytes()); }

    static HashIndex deserialize(const std::filesystem::path& path) { return from_bytes(detail::read_file(path)); }

    friend bool operator==(const HashIndex& a, const HashIndex& b) {
        return a.fingerprint_ == b.fingerprint_ && a.codeset_ == b.codeset_;
    }

private:
    explicit HashIndex(CodeSet codeset)
        : codeset_(std::move(codeset)), words_per_code_(BinaryCode::word_count(codeset_.code_length())) {
        words_.reserve(codeset_.size() * words_per_code_);
        for (const auto& c : codeset_.codes()) words_.insert(words_.end(), c.words().begin(), c.words().end());
        std::string content = content_header();
        content.append(content_entries());
        fingerprint_ = detail::sha256(content);
    }

    void check_length(const BinaryCode& code) const {
        if (code.length() != code_length()) {
            throw Error(ErrorCode::LengthMismatch, "query code length " + std::to_string(code.length()) +
                                                       " != index code length " + std::to_string(code_length()));
        }
    }

    // u32 L, u64 percentile bits, u64 count.
    [[nodiscard]] std::string content_header() const {
        detail::ByteWriter out;
        out.put(static_cast<std::uint32_t>(code_length()));
        out.put_f64(percentile().value());
        out.put(static_cast<std::uint64_t>(size()));
        return out.take();
    }

    [[nodiscard]] std::string content_entries() const {
        detail::ByteWriter out;
        for (std::size_t i = 0; i < size(); ++i) {
            out.put_string(codeset_.ids()[i]);
            out.put_string(codeset_.labels()[i]);
            for (auto w : codeset_.codes()[i].words()) out.put(w);
        }
        return out.take();
    }

    CodeSet codeset_;
    std::size_t words_per_code_;
    std::vector<std::uint64_t> words_;
    Fingerprint fingerprint_{};
};

}  // namespace hashfind
