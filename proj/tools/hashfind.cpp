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

// hashfind: binary-hash retrieval from the command line.
//
//   hashfind synth  --out ref.csv [--query-per-class N --query-out qry.csv]
//   hashfind encode --embeddings ref.csv -q 50 --out ref.hidx
//   hashfind build  --embeddings ref.csv -q 50 --out ref.hidx
//   hashfind query  --index ref.hidx --queries qry.csv -k 100 --out hits.csv
//   hashfind eval   --reference ref.csv --queries qry.csv -q 50 --depth full --out report.json
//   hashfind sweep  --reference ref.csv --queries qry.csv --percentiles 0:100:2 --out curve.csv
//
// Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <hashfind/hashfind.hpp>

#include <CLI11.hpp>

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace hashfind;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::optional<double> to_double(std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

/// "full" or a positive integer.
EvalDepth parse_depth(const std::string& text) {
    if (text == "full") return EvalDepth::full();
    std::size_t k = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), k);
    if (ec != std::errc{} || ptr != text.data() + text.size() || k == 0) {
        throw UsageError("--depth must be 'full' or a positive integer, got '" + text + "'");
    }
    return EvalDepth::top(k);
}

ThresholdPercentile parse_percentile(std::string_view text) {
    auto v = to_double(text);
    if (!v || !(*v >= 0.0 && *v <= 100.0)) {
        throw UsageError("percentile must be a number in [0,100], got '" + std::string(text) + "'");
    }
    return ThresholdPercentile(*v);
}

/// Comma-separated items, each either a single percentile or start:stop:step (inclusive).
std::vector<ThresholdPercentile> parse_percentile_list(const std::string& text) {
    std::vector<ThresholdPercentile> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        std::string_view item(text.data() + start, (comma == std::string::npos ? text.size() : comma) - start);
        start = comma == std::string::npos ? text.size() + 1 : comma + 1;
        if (item.find(':') == std::string_view::npos) {
            out.push_back(parse_percentile(item));
            continue;
        }
        auto c1 = item.find(':');
        auto c2 = item.find(':', c1 + 1);
        if (c2 == std::string_view::npos) throw UsageError("range must be start:stop:step, got '" + std::string(item) + "'");
        auto lo = to_double(item.substr(0, c1));
        auto hi = to_double(item.substr(c1 + 1, c2 - c1 - 1));
        auto step = to_double(item.substr(c2 + 1));
        if (!lo || !hi || !step || !(*step > 0.0) || !(*lo >= 0.0) || !(*hi <= 100.0) || *lo > *hi) {
            throw UsageError("bad percentile range '" + std::string(item) + "'");
        }
        // Integer stepping avoids accumulating rounding error in long ranges.
        for (std::size_t i = 0;; ++i) {
            const double q = *lo + static_cast<double>(i) * *step;
            if (q > *hi + 1e-9) break;
            out.emplace_back(std::min(q, *hi));
        }
    }
    if (out.empty()) throw UsageError("empty percentile list");
    return out;
}

LoadOptions load_options(bool no_sigmoid, SplitTag tag) { return LoadOptions{tag, !no_sigmoid}; }

bool is_index_file(const std::string& path) {
    if (path == "-") return false;
    const auto data = detail::read_file(path);
    return data.starts_with(std::string_view(kIndexMagic.data(), kIndexMagic.size()));
}

/// Reference side of eval/query: either a prebuilt index or embeddings to encode at q.
HashIndex load_reference(const std::string& path, std::optional<ThresholdPercentile> q, bool no_sigmoid,
                         std::size_t threads) {
    if (is_index_file(path)) {
        auto index = HashIndex::deserialize(path);
        if (q && *q != index.percentile()) {
            throw UsageError("index was encoded at percentile " + std::to_string(index.percentile().value()) +
                             " but -q " + std::to_string(q->value()) + " was requested");
        }
        return index;
    }
    const auto set = load_embeddings(path, load_options(no_sigmoid, SplitTag::train));
    return HashIndex::build(encode_set(set, q.value_or(ThresholdPercentile(50.0)), threads));
}

void warn_excluded(const EvalReport& report) {
    if (report.excluded_queries.empty()) return;
    std::cerr << "warning: " << report.excluded_queries.size()
              << " query(ies) have no reference with the same label and were excluded from mAP\n";
}

std::string argmax_line(const SweepReport& report) {
    std::string line = "max mAP " + std::to_string(report.max_map) + " at percentile(s):";
    for (const auto& q : report.argmax) {
        std::string v;
        detail::append_double(v, q.value());
        line += ' ' + v;
    }
    return line + '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hashfind: binary hash codes, Hamming-distance retrieval and mAP evaluation"};
    app.require_subcommand(1);
    app.fallthrough();

    std::size_t threads = 0;
    bool no_sigmoid = false;
    app.add_option("--threads", threads, "Worker threads (0 = HASHFIND_THREADS or hardware concurrency)");
    app.add_flag("--no-sigmoid-range", no_sigmoid, "Accept embedding components outside [0,1]");

    // synth
    auto* synth = app.add_subcommand("synth", "Write a synthetic clustered embedding set");
    SyntheticParams sp;
    std::size_t query_per_class = 0;
    std::string synth_out = "-", synth_query_out, synth_format = "csv";
    synth->add_option("--classes", sp.num_classes, "Number of classes")->check(CLI::PositiveNumber);
    synth->add_option("--per-class", sp.per_class, "Reference samples per class")->check(CLI::PositiveNumber);
    synth->add_option("--dim", sp.dim, "Embedding dimension")->check(CLI::Range(std::size_t{1}, kMaxCodeLength));
    synth->add_option("--separation", sp.separation, "Class-center spread")->check(CLI::NonNegativeNumber);
    synth->add_option("--noise", sp.noise, "Per-sample noise standard deviation")->check(CLI::NonNegativeNumber);
    synth->add_option("--seed", sp.seed, "Random seed");
    synth->add_option("--query-per-class", query_per_class, "Extra samples per class written to --query-out");
    synth->add_option("--query-out", synth_query_out, "Query embeddings output path");
    synth->add_option("--out", synth_out, "Reference embeddings output path ('-' = stdout)");
    synth->add_option("--format", synth_format, "csv or binary")->check(CLI::IsMember({"csv", "binary"}));

    // encode / build
    std::string embeddings_path, index_out;
    double percentile = 50.0;
    auto* encode = app.add_subcommand("encode", "Binarize embeddings at a percentile and write a code file");
    encode->add_option("--embeddings", embeddings_path, "Embeddings (CSV or EMB1)")->required();
    encode->add_option("-q,--percentile", percentile, "Threshold percentile")->check(CLI::Range(0.0, 100.0));
    encode->add_option("--out", index_out, "Output code file")->required();
    auto* build = app.add_subcommand("build", "Build a Hamming index from embeddings or a code file");
    build->add_option("--embeddings", embeddings_path, "Embeddings (CSV or EMB1) or a code file")->required();
    build->add_option("-q,--percentile", percentile, "Threshold percentile")->check(CLI::Range(0.0, 100.0));
    build->add_option("--out", index_out, "Output index file")->required();

    // query
    std::string index_path, queries_path, query_out = "-";
    std::size_t k = kDefaultTopK;
    auto* query = app.add_subcommand("query", "Top-k Hamming retrieval for every query embedding");
    query->add_option("--index", index_path, "Index file")->required();
    query->add_option("--queries", queries_path, "Query embeddings (CSV or EMB1)")->required();
    query->add_option("-k", k, "Results per query")->check(CLI::PositiveNumber);
    query->add_option("--out", query_out, "Output CSV ('-' = stdout)");

    // eval / sweep
    std::string reference_path, depth_text = "full", report_out = "-", per_query_out, json_out;
    std::optional<double> eval_q;
    auto* eval = app.add_subcommand("eval", "mAP of the queries against the reference set");
    eval->add_option("--reference", reference_path, "Reference embeddings or index file")->required();
    eval->add_option("--queries", queries_path, "Query embeddings")->required();
    eval->add_option("-q,--percentile", eval_q, "Threshold percentile (default 50, or the index's)")
        ->check(CLI::Range(0.0, 100.0));
    eval->add_option("--depth", depth_text, "'full' or a ranking depth");
    eval->add_option("--out", report_out, "JSON report path ('-' = stdout)");
    eval->add_option("--per-query-csv", per_query_out, "Optional per-query CSV");

    std::string percentile_list = "0:100:2";
    auto* sweep_cmd = app.add_subcommand("sweep", "mAP as a function of the encoding percentile");
    sweep_cmd->add_option("--reference", reference_path, "Reference embeddings")->required();
    sweep_cmd->add_option("--queries", queries_path, "Query embeddings")->required();
    sweep_cmd->add_option("--percentiles", percentile_list, "Comma list and/or start:stop:step ranges");
    sweep_cmd->add_option("--depth", depth_text, "'full' or a ranking depth");
    sweep_cmd->add_option("--out", report_out, "CSV output ('-' = stdout)");
    sweep_cmd->add_option("--json", json_out, "Optional JSON report path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*synth) {
            if (!synth_query_out.empty() && query_per_class == 0) {
                throw UsageError("--query-out requires --query-per-class");
            }
            if (query_per_class > 0 && synth_query_out.empty()) {
                throw UsageError("--query-per-class requires --query-out");
            }
            if (synth_out == "-" && synth_format == "binary") throw UsageError("binary output needs a file path");
            const auto fmt = synth_format == "csv" ? EmbeddingFormat::csv : EmbeddingFormat::binary;
            const auto reference_per_class = sp.per_class;
            sp.per_class += query_per_class;
            const auto set = generate_synthetic(sp);
            if (query_per_class == 0) {
                save_embeddings(set, synth_out, fmt);
            } else {
                const auto [ref, qry] = split_by_class_quota(set, reference_per_class);
                save_embeddings(ref, synth_out, fmt);
                save_embeddings(qry, synth_query_out, fmt);
            }
        } else if (*encode || *build) {
            const ThresholdPercentile q(percentile);
            HashIndex index = [&] {
                if (is_index_file(embeddings_path)) {
                    auto loaded = HashIndex::deserialize(embeddings_path);
                    if (build->count("-q") > 0 && loaded.percentile() != q) {
                        throw UsageError("code file was encoded at percentile " +
                                         std::to_string(loaded.percentile().value()));
                    }
                    return loaded;
                }
                const auto set = load_embeddings(embeddings_path, load_options(no_sigmoid, SplitTag::train));
                return HashIndex::build(encode_set(set, q, threads));
            }();
            index.serialize(index_out);
            std::cerr << "wrote " << index.size() << " codes (L=" << index.code_length() << ", q=" << q.value()
                      << ", fingerprint " << index.fingerprint_hex() << ") to " << index_out << '\n';
        } else if (*query) {
            const auto index = HashIndex::deserialize(index_path);
            const auto set = load_embeddings(queries_path, load_options(no_sigmoid, SplitTag::test));
            if (set.dim() != index.code_length()) {
                throw Error(ErrorCode::DimensionMismatch, "query embeddings have dimension " + std::to_string(set.dim()) +
                                                              " but the index code length is " +
                                                              std::to_string(index.code_length()));
            }
            if (set.empty()) {
                detail::write_file_atomic(query_out, format_query_csv({}));
                return kExitOk;
            }
            const auto results = index.batch_query(encode_set(set, index.percentile(), threads), k, threads);
            detail::write_file_atomic(query_out, format_query_csv(results));
        } else if (*eval) {
            const auto depth = parse_depth(depth_text);
            std::optional<ThresholdPercentile> q;
            if (eval_q) q = ThresholdPercentile(*eval_q);
            const auto index = load_reference(reference_path, q, no_sigmoid, threads);
            const auto set = load_embeddings(queries_path, load_options(no_sigmoid, SplitTag::test));
            if (set.empty()) throw Error(ErrorCode::NoScorableQuery, "query set is empty");
            const auto report = evaluate(index, set, depth, threads);
            warn_excluded(report);
            detail::write_file_atomic(report_out, to_json(report).dump(2) + '\n');
            if (!per_query_out.empty()) detail::write_file_atomic(per_query_out, format_per_query_csv(report));
            if (report_out != "-") std::cout << "mAP " << report.map << " over " << report.n_queries_scored << " queries\n";
        } else if (*sweep_cmd) {
            const auto depth = parse_depth(depth_text);
            const auto percentiles = parse_percentile_list(percentile_list);
            const auto ref = load_embeddings(reference_path, load_options(no_sigmoid, SplitTag::train));
            const auto qry = load_embeddings(queries_path, load_options(no_sigmoid, SplitTag::test));
            if (ref.empty()) throw Error(ErrorCode::EmptyInput, "reference set is empty");
            if (qry.empty()) throw Error(ErrorCode::NoScorableQuery, "query set is empty");
            const auto report = sweep(ref, qry, percentiles, depth, threads);
            detail::write_file_atomic(report_out, format_sweep_csv(report));
            if (!json_out.empty()) detail::write_file_atomic(json_out, to_json(report).dump(2) + '\n');
            (report_out == "-" ? std::cerr : std::cout) << argmax_line(report);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
