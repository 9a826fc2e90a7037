#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "qrp/feedback.hpp"
#include "qrp/features.hpp"
#include "qrp/inverted_index.hpp"
#include "qrp/metrics.hpp"

namespace {

// Zipf-ish synthetic corpus: word ids drawn from a geometric distribution.
std::vector<qrp::Document> synthetic_corpus(std::size_t n_docs, std::size_t doc_len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::geometric_distribution<int> word(0.002);
    std::vector<qrp::Document> docs;
    docs.reserve(n_docs);
    for (std::size_t i = 0; i < n_docs; ++i) {
        std::string text;
        for (std::size_t j = 0; j < doc_len; ++j) {
            text += "w" + std::to_string(word(rng)) + ' ';
        }
        docs.push_back({"d" + std::to_string(i), std::move(text)});
    }
    return docs;
}

const qrp::InvertedIndex& shared_index() {
    static const auto index = qrp::InvertedIndex::build(synthetic_corpus(20000, 60, 7));
    return index;
}

void BM_IndexBuild(benchmark::State& state) {
    const auto docs = synthetic_corpus(static_cast<std::size_t>(state.range(0)), 60, 1);
    for (auto _ : state) {
        auto index = qrp::InvertedIndex::build(docs);
        benchmark::DoNotOptimize(index.num_docs());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IndexBuild)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_RetrieveTopK(benchmark::State& state) {
    const auto& index = shared_index();
    const qrp::RetrievalOptions options{static_cast<std::size_t>(state.range(0)), 0, {}};
    std::size_t i = 0;
    const std::vector<std::string> queries = {"w1 w5 w40", "w0 w2", "w100 w7 w13 w250", "w3"};
    for (auto _ : state) {
        auto ctx = qrp::retrieve_topk(index, queries[i++ % queries.size()], options, "q");
        benchmark::DoNotOptimize(ctx.entries.data());
    }
}
BENCHMARK(BM_RetrieveTopK)->Arg(10)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_Rm3Expand(benchmark::State& state) {
    const auto& index = shared_index();
    for (auto _ : state) {
        auto q = qrp::rm3_expand(index, "w1 w5 w40");
        benchmark::DoNotOptimize(q.terms.size());
    }
}
BENCHMARK(BM_Rm3Expand)->Unit(benchmark::kMicrosecond);

void BM_Featurize(benchmark::State& state) {
    const auto& index = shared_index();
    const auto ctx = qrp::retrieve_topk(index, "w1 w5 w40", qrp::RetrievalOptions{3, 64, {}}, "q");
    const qrp::FeatureConfig config;
    for (auto _ : state) {
        auto x = qrp::featurize("w1 w5 w40", ctx, config);
        benchmark::DoNotOptimize(x.indices.data());
    }
}
BENCHMARK(BM_Featurize)->Unit(benchmark::kMicrosecond);

void BM_Metrics(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::vector<std::string> ranked;
    qrp::Grades grades;
    for (int i = 0; i < 1000; ++i) {
        ranked.push_back("d" + std::to_string(i));
        if (rng() % 20 == 0) grades[ranked.back()] = static_cast<int>(rng() % 4);
    }
    for (auto _ : state) {
        double s = qrp::ndcg_at_k(ranked, grades, 10) + qrp::average_precision_at_k(ranked, grades, 1000) +
                   qrp::recall_at_k(ranked, grades, 1000);
        benchmark::DoNotOptimize(s);
    }
}
BENCHMARK(BM_Metrics)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
