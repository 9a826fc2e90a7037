#pragma once

#include <random>
#include <set>
#include <string>
#include <vector>

#include "qrp/corpus.hpp"
#include "qrp/inverted_index.hpp"
#include "qrp/selector.hpp"
#include "qrp/trec.hpp"
#include "qrp/pipeline.hpp"
#include "support.hpp"

namespace fixtures {

/// Co-occurrence fixture: documents about the animal mention "jaguar"
/// together with "cat"; some relevant documents say only "cat".
struct Cooccurrence {
    std::vector<qrp::Document> docs;
    std::string query = "jaguar";
    std::set<std::string> relevant;
    std::set<std::string> cat_only;
};

inline Cooccurrence cooccurrence() {
    Cooccurrence f;
    const char* animal[] = {
        "jaguar big cat spotted coat rainforest",
        "the jaguar is a wild cat of the americas",
        "jaguar cat hunts at night near rivers",
        "spotted cat jaguar prowls the jungle",
        "jaguar cat population in the amazon",
        "a jaguar is the largest cat in brazil",
    };
    const char* cat_only[] = {
        "wild cat spotted in the rainforest canopy",
        "big cat conservation in the jungle",
        "this cat hunts near rivers of the amazon",
    };
    const char* filler[] = {
        "stock market report for monday", "weather forecast rain expected",
        "recipe for apple pie with cinnamon", "football league results announced",
        "new phone released with larger screen", "train timetable changes this winter",
        "city council approves new budget", "guide to repairing a bicycle chain",
        "history of the printing press", "tips for growing tomatoes indoors",
        "review of the latest sports car", "jaguar dealership opens downtown",
    };
    int n = 0;
    auto add = [&](const char* text) {
        char id[16];
        std::snprintf(id, sizeof id, "p%02d", n++);
        f.docs.push_back({id, text});
        return std::string(id);
    };
    for (const char* t : animal) f.relevant.insert(add(t));
    for (const char* t : cat_only) {
        const auto id = add(t);
        f.relevant.insert(id);
        f.cat_only.insert(id);
    }
    for (const char* t : filler) add(t);
    return f;
}

/// Keyword-separable selector data: class c is marked by the word "kw<c>"
/// among shared noise words, in the query and in one context snippet.
struct Separable {
    std::vector<qrp::SelectorExample> train;
    std::vector<qrp::SelectorExample> held_out;
};

inline Separable separable(std::size_t classes, std::size_t per_class, std::size_t held_out_per_class,
                           std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> noise(0, 199);
    auto words = [&](int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += " w" + std::to_string(noise(rng));
        return s;
    };
    auto make = [&](std::size_t c, std::size_t i, const char* split) {
        qrp::SelectorExample ex;
        ex.id = std::string(split) + std::to_string(c) + "-" + std::to_string(i);
        ex.label = static_cast<int>(c);
        ex.query = words(2) + " kw" + std::to_string(c) + words(2);
        ex.context = qrp::RetrievalContext{ex.id, 2, {{"d1", 1.0, words(8)}, {"d2", 0.5, "kw" + std::to_string(c) + words(6)}}};
        return ex;
    };
    Separable out;
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) out.train.push_back(make(c, i, "tr"));
        for (std::size_t i = 0; i < held_out_per_class; ++i) out.held_out.push_back(make(c, i, "ho"));
    }
    return out;
}

/// Random graded judgments plus a run that covers some judged documents,
/// some unjudged ones, and occasionally a query with no judgments.
struct MetricInstance {
    qrp::Run run;
    qrp::Qrels qrels;
};

inline MetricInstance random_metric_instance(std::mt19937_64& rng) {
    MetricInstance out;
    const std::size_t queries = 1 + rng() % 6;
    const std::size_t pool = 5 + rng() % 60;
    for (std::size_t q = 0; q < queries; ++q) {
        const std::string qid = "q" + std::to_string(q);
        auto& judged = out.qrels.judgments[qid];
        for (std::size_t d = 0; d < pool; ++d) {
            if (rng() % 3 == 0) judged["doc" + std::to_string(d)] = static_cast<int>(rng() % 4);
        }
        if (judged.empty()) judged["doc0"] = static_cast<int>(rng() % 4);
        if (q > 0 && rng() % 5 == 0) continue;  // judged but absent from the run
        std::vector<std::string> docs;
        for (std::size_t d = 0; d < pool; ++d) docs.push_back("doc" + std::to_string(d));
        std::shuffle(docs.begin(), docs.end(), rng);
        docs.resize(1 + rng() % docs.size());
        double score = 100.0;
        for (std::size_t r = 0; r < docs.size(); ++r) {
            score -= static_cast<double>(rng() % 3);  // ties allowed
            out.run.by_query[qid].push_back({qid, docs[r], r + 1, score, "rand"});
        }
    }
    if (rng() % 4 == 0) out.run.by_query["unjudged"].push_back({"unjudged", "doc1", 1, 1.0, "rand"});
    return out;
}

/// A small on-disk experiment: corpus, queries, qrels, the reference
/// library, a quickly trained selector and a mock script whose fallback
/// answers every generation prompt with `reply_template`.
inline qrp::PipelineConfig write_experiment(const testing_support::TempDir& dir,
                                            const std::string& reply_template) {
    const auto f = cooccurrence();
    std::string corpus;
    for (const auto& d : f.docs) corpus += d.doc_id + "\t" + d.text + "\n";
    testing_support::write_file(dir / "corpus.tsv", corpus);
    testing_support::write_file(dir / "queries.tsv",
                                "q1\tjaguar\nq2\twild cat rainforest\nq3\tapple pie recipe\n"
                                "q4\tstock market\nq5\tzebra\n");
    std::string qrels;
    for (const auto& id : f.relevant) qrels += "q1 0 " + id + " 2\n";
    qrels += "q2 0 p06 3\nq3 0 p11 2\nq4 0 p09 1\nq5 0 p00 2\n";
    testing_support::write_file(dir / "qrels.txt", qrels);

    auto library = qrp::reference_library();
    library.version = qrp::library_fingerprint(library);
    qrp::write_library(library, dir / "library.json");

    qrp::FeatureConfig features;
    features.dim = 1u << 12;
    std::vector<qrp::SelectorExample> examples;
    const char* texts[] = {"jaguar habitat", "cat food", "market trends", "apple desserts", "rain forecast"};
    for (int i = 0; i < 20; ++i) {
        examples.push_back({std::to_string(i), texts[i % 5], qrp::RetrievalContext{std::to_string(i), 0, {}}, i % 10});
    }
    qrp::SelectorHyper hyper;
    hyper.epochs = 3;
    qrp::train_selector(examples, library, hyper, features).model.save(dir / "selector.bin");

    qrp::MockScript script;
    script.fallback = reply_template;
    script.save(dir / "mock.json");

    qrp::PipelineConfig cfg;
    cfg.corpus = dir / "corpus.tsv";
    cfg.queries = dir / "queries.tsv";
    cfg.qrels = dir / "qrels.txt";
    cfg.library = dir / "library.json";
    cfg.selector_model = dir / "selector.bin";
    cfg.gateway.mock_script = dir / "mock.json";
    cfg.run_out = dir / "run.txt";
    cfg.k_eval = 100;
    return cfg;
}

}  // namespace fixtures
