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

#include <hashfind/error.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <system_error>

namespace hashfind::detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <typename T>
constexpr T byteswap_if_big(T value) noexcept {
    if constexpr (std::endian::native == std::endian::little) {
        return value;
    } else {
        T out{};
        auto* src = reinterpret_cast<const unsigned char*>(&value);
        auto* dst = reinterpret_cast<unsigned char*>(&out);
        for (std::size_t i = 0; i < sizeof(T); ++i) dst[i] = src[sizeof(T) - 1 - i];
        return out;
    }
}

// Appends little-endian scalars and u32-length-prefixed strings to a byte buffer.
class ByteWriter {
public:
    template <typename T>
        requires std::is_integral_v<T>
    void put(T value) {
        T le = byteswap_if_big(value);
        buffer_.append(reinterpret_cast<const char*>(&le), sizeof(T));
    }

    void put_f64(double value) { put(std::bit_cast<std::uint64_t>(value)); }

    void put_bytes(std::string_view bytes) { buffer_.append(bytes); }

    void put_string(std::string_view s) {
        if (s.size() > std::numeric_limits<std::uint32_t>::max()) {
            throw Error(ErrorCode::InvalidArgument, "string too long for u32 length prefix");
        }
        put(static_cast<std::uint32_t>(s.size()));
        buffer_.append(s);
    }

    [[nodiscard]] const std::string& bytes() const noexcept { return buffer_; }
    [[nodiscard]] std::string take() noexcept { return std::move(buffer_); }

private:
    std::string buffer_;
};

// Bounds-checked little-endian reader; running off the end raises Truncated.
class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    template <typename T>
        requires std::is_integral_v<T>
    T get() {
        require(sizeof(T));
        T value{};
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return byteswap_if_big(value);
    }

    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

    std::string_view get_bytes(std::size_t n) {
        require(n);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    std::string get_string() {
        auto n = get<std::uint32_t>();
        return std::string(get_bytes(n));
    }

    [[nodiscard]] std::size_t position() const noexcept { return pos_; }
    [[nodiscard]] std::size_t remaining() const noexcept { return data_.size() - pos_; }

private:
    void require(std::size_t n) const {
        if (data_.size() - pos_ < n) {
            throw Error(ErrorCode::Truncated, "unexpected end of data at byte " + std::to_string(pos_));
        }
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::Io, "read failure on '" + path.string() + "'");
    return data;
}

/// Writes `data` to `path` through a sibling temporary file and a rename, so readers
/// never observe a partially written file. The path "-" selects stdout.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
    if (path == "-") {
        std::cout.write(data.data(), static_cast<std::streamsize>(data.size()));
        std::cout.flush();
        if (!std::cout) throw Error(ErrorCode::Io, "write failure on stdout");
        return;
    }
    std::random_device rd;
    auto tmp = path;
    tmp += ".tmp." + std::to_string(rd());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot open '" + tmp.string() + "' for writing");
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) {
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw Error(ErrorCode::Io, "write failure on '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::error_code ignored;
        std::filesystem::remove(tmp, ignored);
        throw Error(ErrorCode::Io, "cannot rename onto '" + path.string() + "': " + ec.message());
    }
}

}  // namespace hashfind::detail
