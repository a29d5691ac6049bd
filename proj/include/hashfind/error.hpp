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

#include <stdexcept>
#include <string>
#include <string_view>

namespace hashfind {

enum class ErrorCode {
    InvalidArgument,
    EmptyInput,
    MalformedRow,
    DuplicateId,
    OutOfRange,
    DimensionMismatch,
    LengthMismatch,
    Io,
    BadMagic,
    VersionMismatch,
    FingerprintMismatch,
    Truncated,
    NoScorableQuery,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::Io: return "Io";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
        case ErrorCode::Truncated: return "Truncated";
        case ErrorCode::NoScorableQuery: return "NoScorableQuery";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so callers
/// (and tests) can dispatch on the kind without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace hashfind
