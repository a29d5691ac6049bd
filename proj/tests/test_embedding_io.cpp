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

#include <hashfind/embedding_io.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

namespace hashfind {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("hashfind_io_" + std::to_string(std::random_device{}()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& content) const {
        auto p = dir_ / name;
        std::ofstream(p, std::ios::binary) << content;
        return p;
    }

    fs::path dir_;
};

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::InvalidArgument;
}

EmbeddingSet random_set(std::size_t n, std::size_t dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<EmbeddingRecord> records;
    for (std::size_t i = 0; i < n; ++i) {
        EmbeddingRecord r{"id" + std::to_string(i), "L" + std::to_string(rng() % 5), {}};
        for (std::size_t j = 0; j < dim; ++j) r.vector.push_back(u(rng));
        records.push_back(std::move(r));
    }
    return EmbeddingSet(std::move(records), dim);
}

TEST(EmbeddingCsv, ParsesRowsInFileOrder) {
    const auto set = parse_embeddings_csv("id,label,e0,e1\ng1,FRI,0.9,0.1\ng2,FRII,0.2,0.8\n");
    ASSERT_EQ(set.size(), 2U);
    EXPECT_EQ(set.dim(), 2U);
    EXPECT_EQ(set[0].id, "g1");
    EXPECT_EQ(set[1].id, "g2");
    EXPECT_EQ(set[0].label, "FRI");
    EXPECT_EQ(set[1].vector, (std::vector<double>{0.2, 0.8}));
}

TEST(EmbeddingCsv, AcceptsCrlfAndMissingFinalNewline) {
    const auto set = parse_embeddings_csv("id,label,e0\r\na,X,0.5\r\nb,Y,1");
    EXPECT_EQ(set.size(), 2U);
    EXPECT_EQ(set[1].vector[0], 1.0);
}

TEST(EmbeddingCsv, Errors) {
    EXPECT_EQ(code_of([] { parse_embeddings_csv("id,label,e0,e1\ng1,FRI,0.9,0.1\ng1,FRII,0.2,0.8\n"); }),
              ErrorCode::DuplicateId);
    EXPECT_EQ(code_of([] { parse_embeddings_csv("id,label,e0,e1\ng1,FRI,0.9\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([] { parse_embeddings_csv("id,label,e0,e1\ng1,FRI,0.9,abc\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([] { parse_embeddings_csv("id,label,e0,e1\ng1,FRI,0.9,0.1x\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([] { parse_embeddings_csv("id,label,e0,e1\ng1,FRI,0.9,nan\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([] { parse_embeddings_csv("id,label,e0,e1\ng1,FRI,0.9,1.5\n"); }), ErrorCode::OutOfRange);
    EXPECT_EQ(code_of([] { parse_embeddings_csv(""); }), ErrorCode::EmptyInput);
    EXPECT_EQ(code_of([] { parse_embeddings_csv("\n\n"); }), ErrorCode::EmptyInput);
    EXPECT_EQ(code_of([] { parse_embeddings_csv("id,label\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([] { parse_embeddings_csv("id,label,e1\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([] { parse_embeddings_csv("id,label,e0\n,X,0.5\n"); }), ErrorCode::MalformedRow);
}

TEST(EmbeddingCsv, OutOfRangeAllowedWithoutSigmoidFlag) {
    const auto set = parse_embeddings_csv("id,label,e0\na,X,-3.5\n", {SplitTag::train, false});
    EXPECT_FALSE(set.sigmoid_range());
    EXPECT_EQ(set.split_tag(), SplitTag::train);
    EXPECT_EQ(set[0].vector[0], -3.5);
}

TEST(EmbeddingCsv, HeaderOnlyIsAnEmptySet) {
    const auto set = parse_embeddings_csv("id,label,e0,e1,e2\n");
    EXPECT_TRUE(set.empty());
    EXPECT_EQ(set.dim(), 3U);
}

TEST_F(TempDir, EmptySetRoundTripsAsHeaderOnly) {
    const EmbeddingSet empty({}, 4);
    const auto path = dir_ / "empty.csv";
    save_embeddings(empty, path, EmbeddingFormat::csv);
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), {});
    EXPECT_EQ(content, "id,label,e0,e1,e2,e3\n");
    EXPECT_EQ(load_embeddings(path, EmbeddingFormat::csv), empty);
    save_embeddings(empty, dir_ / "empty.bin", EmbeddingFormat::binary);
    EXPECT_EQ(load_embeddings(dir_ / "empty.bin", EmbeddingFormat::binary), empty);
}

TEST_F(TempDir, SingleRecordIsSingleDataRow) {
    const EmbeddingSet one({{"only", "Bent", {0.25, 0.5}}}, 2);
    const auto path = dir_ / "one.csv";
    save_embeddings(one, path, EmbeddingFormat::csv);
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), {});
    EXPECT_EQ(content, "id,label,e0,e1\nonly,Bent,0.25,0.5\n");
}

TEST_F(TempDir, RandomSetsRoundTripExactlyInBothFormats) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto set = random_set(1000, 1 + seed * 3, seed);
        for (auto fmt : {EmbeddingFormat::binary, EmbeddingFormat::csv}) {
            const auto path = dir_ / (fmt == EmbeddingFormat::csv ? "r.csv" : "r.bin");
            save_embeddings(set, path, fmt);
            EXPECT_EQ(load_embeddings(path, fmt), set);
            EXPECT_EQ(load_embeddings(path), set) << "format sniffing";
        }
    }
}

TEST_F(TempDir, LoadErrors) {
    EXPECT_EQ(code_of([&] { load_embeddings(dir_ / "missing.csv", EmbeddingFormat::csv); }), ErrorCode::Io);
    const auto empty = write("empty.csv", "");
    EXPECT_EQ(code_of([&] { load_embeddings(empty, EmbeddingFormat::csv); }), ErrorCode::EmptyInput);
    EXPECT_EQ(code_of([&] { load_embeddings(empty, EmbeddingFormat::binary); }), ErrorCode::EmptyInput);
    const auto bad = write("bad.bin", "XXXX1234");
    EXPECT_EQ(code_of([&] { load_embeddings(bad, EmbeddingFormat::binary); }), ErrorCode::BadMagic);
}

TEST(EmbeddingBinary, Layout) {
    const EmbeddingSet set({{"ab", "C", {1.0}}}, 1);
    const auto bytes = format_embeddings_binary(set);
    // magic(4) + D(4) + count(8) + id(4+2) + label(4+1) + 1 double(8)
    ASSERT_EQ(bytes.size(), 4U + 4 + 8 + 6 + 5 + 8);
    EXPECT_EQ(bytes.substr(0, 4), "EMB1");
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[8], 1);
    EXPECT_EQ(bytes.substr(16, 6), std::string("\x02\0\0\0ab", 6));
    EXPECT_EQ(static_cast<unsigned char>(bytes.back()), 0x3FU);  // 1.0 = 0x3FF0000000000000 little-endian
}

TEST(EmbeddingBinary, TruncationAndTrailingBytesRejected) {
    const auto bytes = format_embeddings_binary(random_set(3, 4, 1));
    EXPECT_EQ(code_of([&] { parse_embeddings_binary(bytes.substr(0, bytes.size() - 1)); }), ErrorCode::Truncated);
    EXPECT_EQ(code_of([&] { parse_embeddings_binary(bytes.substr(0, 10)); }), ErrorCode::Truncated);
    EXPECT_EQ(code_of([&] { parse_embeddings_binary(bytes + "z"); }), ErrorCode::MalformedRow);
}

TEST(EmbeddingCsv, RejectsUnwritableText) {
    const EmbeddingSet set({{"a,b", "X", {0.5}}}, 1);
    EXPECT_EQ(code_of([&] { format_embeddings_csv(set); }), ErrorCode::InvalidArgument);
}

TEST(EmbeddingSetType, Invariants) {
    EXPECT_EQ(code_of([] { EmbeddingSet({{"a", "X", {0.5, 0.5}}}, 1); }), ErrorCode::DimensionMismatch);
    EXPECT_EQ(code_of([] { EmbeddingSet({}, 0); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { EmbeddingSet({{"a", "X", {0.5}}, {"a", "Y", {0.1}}}, 1); }), ErrorCode::DuplicateId);
}

TEST(Synthetic, ShapeAndRange) {
    const auto set = generate_synthetic({4, 10, 8, 4.0, 0.1, 7});
    EXPECT_EQ(set.size(), 40U);
    EXPECT_EQ(set.dim(), 8U);
    for (const auto& r : set.records()) {
        for (double v : r.vector) {
            EXPECT_GT(v, 0.0);
            EXPECT_LT(v, 1.0);
        }
    }
    EXPECT_EQ(set[0].label, "class0");
    EXPECT_EQ(set[39].label, "class3");
}

TEST(Synthetic, DegenerateParametersGiveIdenticalVectors) {
    const auto set = generate_synthetic({1, 5, 3, 0.0, 0.0, 1});
    ASSERT_EQ(set.size(), 5U);
    for (const auto& r : set.records()) EXPECT_EQ(r.vector, set[0].vector);
}

TEST(Synthetic, DeterministicPerSeed) {
    const SyntheticParams p{3, 30, 6, 2.0, 0.5, 99};
    EXPECT_EQ(generate_synthetic(p), generate_synthetic(p));
    auto other = p;
    other.seed = 100;
    EXPECT_NE(generate_synthetic(p), generate_synthetic(other));
}

TEST(Synthetic, InvalidParameters) {
    EXPECT_THROW(generate_synthetic({0, 5, 3, 1, 1, 1}), Error);
    EXPECT_THROW(generate_synthetic({1, 0, 3, 1, 1, 1}), Error);
    EXPECT_THROW(generate_synthetic({1, 5, 0, 1, 1, 1}), Error);
    EXPECT_THROW(generate_synthetic({1, 5, 3, -1, 1, 1}), Error);
}

TEST(Synthetic, SplitByClassQuota) {
    const auto set = generate_synthetic({4, 60, 8, 6.0, 0.2, 42});
    const auto [reference, query] = split_by_class_quota(set, 50);
    EXPECT_EQ(reference.size(), 200U);
    EXPECT_EQ(query.size(), 40U);
    EXPECT_EQ(reference.split_tag(), SplitTag::train);
    EXPECT_EQ(query.split_tag(), SplitTag::test);
    EXPECT_EQ(query[0].id, "s50");
    EXPECT_EQ(query[10].label, "class1");
}

TEST(Manifest, RadioGalaxyCountsMatchPublishedTable) {
    const auto m = radio_galaxy_manifest();
    EXPECT_EQ(m.counts("Bent")->total(), 508U);
    EXPECT_EQ(m.counts("Compact")->total(), 406U);
    EXPECT_EQ(m.counts("FRI")->total(), 389U);
    EXPECT_EQ(m.counts("FRII")->total(), 679U);
    const auto t = m.totals();
    EXPECT_EQ(t.train, 1180U);
    EXPECT_EQ(t.validation, 398U);
    EXPECT_EQ(t.test, 404U);
    EXPECT_EQ(t.total(), 1982U);
    std::uint64_t balanced = 0;
    for (const auto& [label, n] : radio_galaxy_balanced_counts()) balanced += n;
    EXPECT_EQ(balanced, 2708U);
}

TEST(Manifest, CsvRoundTripAndTotalCheck) {
    const auto m = radio_galaxy_manifest();
    const auto text = format_manifest_csv(m);
    EXPECT_NE(text.find("Total,1180,398,404"), std::string::npos);
    EXPECT_EQ(parse_manifest_csv(text), m);
    EXPECT_EQ(code_of([] { parse_manifest_csv("label,train,validation,test\nA,1,2,3\nTotal,1,2,4\n"); }),
              ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([] { parse_manifest_csv("label,train,validation,test\nA,1,x,3\n"); }), ErrorCode::MalformedRow);
    EXPECT_EQ(code_of([] { parse_manifest_csv("label,train,validation,test\nA,1,2,3\nA,1,2,3\n"); }),
              ErrorCode::DuplicateId);
    EXPECT_EQ(code_of([] { parse_manifest_csv(""); }), ErrorCode::EmptyInput);
}

}  // namespace
}  // namespace hashfind
