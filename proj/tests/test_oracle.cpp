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

#include <hashfind/index.hpp>

#include <gtest/gtest.h>

#include <random>

#include "oracle/synth_oracle.hpp"

namespace hashfind {
namespace {

using Q = ThresholdPercentile;

TEST(OracleHamming, BasicCases) {
    const auto a = BinaryCode::from_string("0110100111");
    EXPECT_EQ(oracle::oracle_hamming(a, a), 0);
    EXPECT_EQ(oracle::oracle_hamming(a, BinaryCode::from_string("0110100110")), 1);
    EXPECT_THROW(oracle::oracle_hamming(a, BinaryCode(3)), std::invalid_argument);
}

TEST(OracleHamming, AgreesWithEngineAtEightBits) {
    std::mt19937_64 rng(77);
    for (int t = 0; t < 10000; ++t) {
        const auto a = BinaryCode(8, std::vector<std::uint64_t>{rng() & 0xFFU});
        const auto b = BinaryCode(8, std::vector<std::uint64_t>{rng() & 0xFFU});
        ASSERT_EQ(oracle::oracle_hamming(a, b), static_cast<int>(hamming(a, b)));
    }
}

TEST(OracleMap, AllRelevantIsOne) {
    const CodeSet ref({BinaryCode::from_string("10"), BinaryCode::from_string("01")}, {"a", "b"}, {"X", "X"}, 2, Q(50));
    const CodeSet qry({BinaryCode::from_string("11")}, {"q"}, {"X"}, 2, Q(50));
    EXPECT_DOUBLE_EQ(oracle::oracle_map(ref, qry, std::nullopt), 1.0);
}

TEST(OracleMap, HandComputedSingleQuery) {
    // Distances from 00: 0 (A), 1 (B), 2 (A) -> rel = [1,0,1], gtp = 2 -> (1 + 2/3) / 2.
    const CodeSet ref({BinaryCode::from_string("00"), BinaryCode::from_string("01"), BinaryCode::from_string("11")},
                      {"a", "b", "c"}, {"A", "B", "A"}, 2, Q(50));
    const CodeSet qry({BinaryCode::from_string("00")}, {"q"}, {"A"}, 2, Q(50));
    EXPECT_NEAR(oracle::oracle_map(ref, qry, std::nullopt), 5.0 / 6.0, 1e-12);
    EXPECT_NEAR(oracle::oracle_ap({1, 0, 1}, 2), 5.0 / 6.0, 1e-12);
}

TEST(OracleMap, InsertionOrderVariant) {
    // Ranking A, B, A for an A query and B, A, A... for a B query.
    const std::vector<std::string> ref{"A", "B", "A"};
    // A: (1 + 2/3)/2 = 5/6; B: (1/2)/1 = 1/2
    EXPECT_NEAR(oracle::oracle_map_insertion_order(ref, {"A", "B"}, std::nullopt), (5.0 / 6.0 + 0.5) / 2.0, 1e-12);
    EXPECT_NEAR(oracle::oracle_map_insertion_order(ref, {"A"}, 1), 0.5, 1e-12);
}

}  // namespace
}  // namespace hashfind
