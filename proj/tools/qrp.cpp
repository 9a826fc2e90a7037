#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "qrp/feedback.hpp"
#include "qrp/hash.hpp"
#include "qrp/induction.hpp"
#include "qrp/inverted_index.hpp"
#include "qrp/metrics.hpp"
#include "qrp/pipeline.hpp"
#include "qrp/selector.hpp"
#include "qrp/tokenizer.hpp"
#include "qrp/trec.hpp"

namespace {

using nlohmann::json;
using namespace qrp;

template <typename T>
void put(json& body, std::initializer_list<const char*> path, const std::optional<T>& value) {
    if (!value) return;
    json* node = &body;
    for (auto it = path.begin(); it + 1 != path.end(); ++it) node = &(*node)[*it];
    (*node)[*(path.end() - 1)] = *value;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

std::string hash_of(const json& body) { return to_hex(stable_hash64(body.dump())); }

struct GatewayFlags {
    std::optional<std::string> mock_script;
    std::optional<std::string> endpoint;
    std::optional<std::string> api_key;
    std::optional<std::string> model;
    std::optional<std::size_t> max_in_flight;
    std::optional<int> max_retries;

    void add(CLI::App& app) {
        auto* g = "LLM gateway";
        app.add_option("--mock-script", mock_script, "Offline mock script (JSON); overrides the endpoint")
            ->group(g);
        app.add_option("--llm-endpoint", endpoint, "OpenAI-compatible base URL [env QRP_LLM_ENDPOINT]")->group(g);
        app.add_option("--llm-api-key", api_key, "API key [env QRP_LLM_API_KEY]")->group(g);
        app.add_option("--llm-model", model, "Model name [env QRP_LLM_MODEL]")->group(g);
        app.add_option("--max-in-flight", max_in_flight, "Concurrent request cap (default 4)")->group(g);
        app.add_option("--max-retries", max_retries, "Retries for transient failures (default 3)")->group(g);
    }

    void overlay(json& body) const {
        put(body, {"gateway", "mock_script"}, mock_script);
        put(body, {"gateway", "endpoint"}, endpoint);
        put(body, {"gateway", "api_key"}, api_key);
        put(body, {"gateway", "model"}, model);
        put(body, {"gateway", "max_in_flight"}, max_in_flight);
        put(body, {"gateway", "max_retries"}, max_retries);
    }

    // Defaults, then environment, then flags.
    [[nodiscard]] GatewayConfig resolve() const {
        PipelineConfig cfg;
        cfg.gateway.apply_environment();
        json body;
        overlay(body);
        cfg.merge_json(body);
        return cfg.gateway;
    }
};

// Every PipelineConfig field as an optional flag.
struct PipelineFlags {
    std::optional<std::string> config;
    std::optional<std::string> corpus, queries, qrels, library, selector_model, hook_passages;
    std::optional<std::string> mode, selector, selection;
    std::optional<std::size_t> k_context, k_eval, snippet_tokens, repetition, threads;
    std::optional<std::uint64_t> seed;
    std::optional<double> k1, b;
    std::optional<std::size_t> rm3_fb_docs, rm3_fb_terms, rocchio_fb_docs, rocchio_fb_terms;
    std::optional<double> rm3_orig_weight, rocchio_alpha, rocchio_beta;
    std::optional<std::size_t> ndcg_depth, eval_depth;
    std::optional<int> binarize_at;
    std::optional<std::string> run_out, log_out, report_out;
    GatewayFlags gateway;

    void add(CLI::App& app, bool llm) {
        app.add_option("--config", config, "JSON config file (flags take precedence)");
        app.add_option("--corpus", corpus, "Corpus TSV (doc_id<TAB>text) or binary index");
        app.add_option("--queries", queries, "Queries TSV (query_id<TAB>text)");
        app.add_option("--qrels", qrels, "TREC qrels; enables evaluation");
        app.add_option("--out", run_out, "Run file to write");
        app.add_option("--report-out", report_out, "Metrics CSV (default <out>.metrics.csv)");
        app.add_option("--k-eval", k_eval, "Run depth (default 1000)");
        app.add_option("--k1", k1, "BM25 k1 (default 0.9)")->group("BM25");
        app.add_option("--b", b, "BM25 b (default 0.4)")->group("BM25");
        app.add_option("--rm3-fb-docs", rm3_fb_docs, "RM3 feedback documents (default 10)")->group("Feedback");
        app.add_option("--rm3-fb-terms", rm3_fb_terms, "RM3 feedback terms (default 10)")->group("Feedback");
        app.add_option("--rm3-orig-weight", rm3_orig_weight, "RM3 original query weight (default 0.5)")
            ->group("Feedback");
        app.add_option("--rocchio-fb-docs", rocchio_fb_docs, "Rocchio feedback documents (default 10)")
            ->group("Feedback");
        app.add_option("--rocchio-fb-terms", rocchio_fb_terms, "Rocchio feedback terms (default 10)")
            ->group("Feedback");
        app.add_option("--rocchio-alpha", rocchio_alpha, "Rocchio alpha (default 1.0)")->group("Feedback");
        app.add_option("--rocchio-beta", rocchio_beta, "Rocchio beta (default 0.75)")->group("Feedback");
        app.add_option("--ndcg-depth", ndcg_depth, "nDCG cutoff (default 10)")->group("Evaluation");
        app.add_option("--eval-depth", eval_depth, "mAP / recall cutoff (default 1000)")->group("Evaluation");
        app.add_option("--binarize-at", binarize_at, "Relevance grade threshold (default 2)")->group("Evaluation");
        app.add_option("--threads", threads, "Worker threads (default: gateway cap, or 1)");
        if (!llm) return;
        app.add_option("--library", library, "Pattern library JSON");
        app.add_option("--selector-model", selector_model, "Trained selector model");
        app.add_option("--hook-passages", hook_passages, "TSV query_id<TAB>passage for reformer+hook");
        app.add_option("--selector", selector, "linear | llm (default linear)");
        app.add_option("--selection", selection, "argmax | sample (default argmax)");
        app.add_option("--k-context", k_context, "Context documents per query (default 3)");
        app.add_option("--snippet-tokens", snippet_tokens, "Tokens per context snippet (default 64)");
        app.add_option("--repetition", repetition, "Original query repetitions in q* (1-5, default 1)");
        app.add_option("--seed", seed, "Seed for sampled selection (default 0)");
        app.add_option("--log-out", log_out, "Reformulation log (default <out>.reformulations.jsonl)");
        gateway.add(app);
    }

    // Defaults, then environment, then config file, then flags.
    [[nodiscard]] PipelineConfig resolve() const {
        PipelineConfig cfg;
        cfg.gateway.apply_environment();
        if (config) cfg.merge_json(read_json_file(*config));
        json body = json::object();
        put(body, {"corpus"}, corpus);
        put(body, {"queries"}, queries);
        put(body, {"qrels"}, qrels);
        put(body, {"library"}, library);
        put(body, {"selector_model"}, selector_model);
        put(body, {"hook_passages"}, hook_passages);
        put(body, {"mode"}, mode);
        put(body, {"selector"}, selector);
        put(body, {"selection"}, selection);
        put(body, {"k_context"}, k_context);
        put(body, {"k_eval"}, k_eval);
        put(body, {"snippet_tokens"}, snippet_tokens);
        put(body, {"repetition"}, repetition);
        put(body, {"seed"}, seed);
        put(body, {"threads"}, threads);
        put(body, {"bm25", "k1"}, k1);
        put(body, {"bm25", "b"}, b);
        put(body, {"rm3", "fb_docs"}, rm3_fb_docs);
        put(body, {"rm3", "fb_terms"}, rm3_fb_terms);
        put(body, {"rm3", "orig_weight"}, rm3_orig_weight);
        put(body, {"rocchio", "fb_docs"}, rocchio_fb_docs);
        put(body, {"rocchio", "fb_terms"}, rocchio_fb_terms);
        put(body, {"rocchio", "alpha"}, rocchio_alpha);
        put(body, {"rocchio", "beta"}, rocchio_beta);
        put(body, {"metrics", "ndcg_depth"}, ndcg_depth);
        put(body, {"metrics", "depth"}, eval_depth);
        put(body, {"metrics", "binarize_at"}, binarize_at);
        put(body, {"run_out"}, run_out);
        put(body, {"log_out"}, log_out);
        put(body, {"report_out"}, report_out);
        gateway.overlay(body);
        cfg.merge_json(body);
        return cfg;
    }
};

void print_summary(const PipelineResult& result) {
    fmt::print(stderr, "run {} -> {}\n", result.outputs.run_tag, result.run_path.string());
    if (!result.log_path.empty()) fmt::print(stderr, "reformulations -> {}\n", result.log_path.string());
    if (result.report) {
        write_report_table(*result.report, std::cout);
        fmt::print(stderr, "metrics -> {}\n", result.report_path.string());
    }
}

// ---------------------------------------------------------------- index

struct IndexCmd {
    std::string corpus, out;
    void add(CLI::App& app) {
        auto* sub = app.add_subcommand("index", "Build a binary BM25 index from a corpus TSV");
        sub->add_option("--corpus", corpus, "Corpus TSV (doc_id<TAB>text)")->required();
        sub->add_option("--out", out, "Index file to write")->required();
        sub->final_callback([this] { action = [this] { return run(); }; });
    }
    int run() const {
        const auto index = InvertedIndex::build(read_documents_tsv(corpus));
        index.save(out);
        fmt::print(stderr, "{} documents, {} terms, avg length {:.2f} -> {}\n", index.num_docs(),
                   index.vocabulary_size(), index.avg_doc_length(), out);
        return 0;
    }
    std::function<int()> action;
};

// ------------------------------------------------------------- retrieve

struct RetrieveCmd {
    std::string corpus, queries, out, tag = "bm25";
    std::optional<std::string> contexts;
    std::size_t k = kDefaultRunDepth;
    std::size_t snippet_tokens = 64;
    Bm25Params bm25;
    void add(CLI::App& app, std::function<int()>& action) {
        auto* sub = app.add_subcommand("retrieve", "BM25 top-k retrieval to a TREC run");
        sub->add_option("--corpus", corpus, "Corpus TSV or binary index")->required();
        sub->add_option("--queries", queries, "Queries TSV")->required();
        sub->add_option("--out", out, "Run file to write")->required();
        sub->add_option("--k", k, "Documents per query")->capture_default_str();
        sub->add_option("--k1", bm25.k1, "BM25 k1")->capture_default_str();
        sub->add_option("--b", bm25.b, "BM25 b")->capture_default_str();
        sub->add_option("--tag", tag, "Run tag")->capture_default_str();
        sub->add_option("--contexts", contexts, "Also write per-query results with snippets (JSONL)");
        sub->add_option("--snippet-tokens", snippet_tokens, "Tokens per snippet")->capture_default_str();
        sub->final_callback([this, &action] { action = [this] { return run(); }; });
    }
    int run() const {
        const auto index = open_corpus(corpus);
        const auto qs = read_queries_tsv(queries);
        Run run_file;
        std::ofstream ctx_out;
        if (contexts) {
            ctx_out.open(*contexts, std::ios::trunc);
            if (!ctx_out) throw DataError("cannot write " + *contexts);
        }
        for (const auto& q : qs) {
            const auto result = retrieve_topk(index, q.text, RetrievalOptions{k, contexts ? snippet_tokens : 0, bm25},
                                              q.query_id);
            append_to_run(run_file, result, tag);
            if (contexts) {
                json entries = json::array();
                for (const auto& e : result.entries) {
                    entries.push_back({{"doc_id", e.doc_id}, {"score", e.score}, {"snippet", e.snippet}});
                }
                ctx_out << json{{"query_id", q.query_id}, {"k", k}, {"entries", entries}}.dump() << '\n';
            }
        }
        write_run(run_file, std::filesystem::path(out));
        fmt::print(stderr, "{} queries -> {}\n", qs.size(), out);
        return 0;
    }
};

// --------------------------------------------------- baseline / run

struct PipelineCmd {
    PipelineFlags flags;
    std::string forced_default_mode;
    void add(CLI::App& app, std::function<int()>& action, const char* name, const char* help, bool llm) {
        auto* sub = app.add_subcommand(name, help);
        flags.add(*sub, llm);
        sub->add_option("--mode", flags.mode,
                        llm ? "bm25 | rm3 | rocchio | reformer | reformer+hook (default bm25)"
                            : "bm25 | rm3 | rocchio (default rm3)");
        if (!llm) forced_default_mode = "rm3";
        sub->final_callback([this, &action] { action = [this] { return run(); }; });
    }
    int run() {
        if (!forced_default_mode.empty() && !flags.mode) flags.mode = forced_default_mode;
        auto cfg = flags.resolve();
        if (!forced_default_mode.empty() && cfg.uses_llm()) {
            throw ConfigError("baseline runs bm25, rm3 or rocchio; use `qrp run` for reformer modes");
        }
        print_summary(run_pipeline(cfg));
        return 0;
    }
};

// ---------------------------------------------------------------- induce

struct InduceCmd {
    std::string pairs, out;
    std::optional<std::string> existing, transcript, source_dataset;
    std::size_t sample = 0;
    std::uint64_t seed = 0;
    InductionOptions options;
    GatewayFlags gateway;
    void add(CLI::App& app, std::function<int()>& action) {
        auto* sub = app.add_subcommand("induce", "Induce a pattern library from training pairs");
        sub->add_option("--pairs", pairs, "Training pairs TSV (pair_id<TAB>query<TAB>reformulation)")->required();
        sub->add_option("--out", out, "Library JSON to write")->required();
        sub->add_option("--sample", sample, "Use a seeded sample of this many pairs (0: all)")->capture_default_str();
        sub->add_option("--seed", seed, "Sampling seed")->capture_default_str();
        sub->add_option("--batch-size", options.batch_size, "Pairs per consolidation call")->capture_default_str();
        sub->add_option("--max-patterns", options.max_patterns, "Library size cap")->capture_default_str();
        sub->add_option("--existing", existing, "Continue from this library");
        sub->add_option("--transcript", transcript, "Transcript JSONL (default <out>.transcript.jsonl)");
        sub->add_option("--source-dataset", source_dataset, "Dataset name recorded in provenance");
        gateway.add(*sub);
        sub->final_callback([this, &action] { action = [this] { return run(); }; });
    }
    int run() {
        auto all = ingest_pairs(pairs);
        if (sample > 0) all = sample_pairs(std::move(all), sample, seed);
        std::optional<PatternLibrary> prior;
        if (existing) prior = read_library(*existing);
        const auto gw_cfg = gateway.resolve();
        auto gw = make_gateway(gw_cfg);
        options.source_dataset = source_dataset.value_or(std::filesystem::path(pairs).stem().string());
        options.config_hash = hash_of({{"pairs", pairs},
                                       {"sample", sample},
                                       {"seed", seed},
                                       {"batch_size", options.batch_size},
                                       {"max_patterns", options.max_patterns},
                                       {"existing", prior ? prior->version : ""},
                                       {"model", gw_cfg.model}});
        Transcript log;
        try {
            const auto library = induce_patterns(all, *gw, options, prior, &log);
            write_library(library, out);
            fmt::print(stderr, "{} patterns from {} pairs -> {}\n", library.size(), all.size(), out);
        } catch (...) {
            log.write_jsonl(transcript.value_or(out + ".transcript.jsonl"));
            throw;
        }
        log.write_jsonl(transcript.value_or(out + ".transcript.jsonl"));
        return 0;
    }
};

// ----------------------------------------------------------------- label

struct LabelCmd {
    std::string pairs, library, out;
    std::optional<std::size_t> threads;
    GatewayFlags gateway;
    void add(CLI::App& app, std::function<int()>& action) {
        auto* sub = app.add_subcommand("label", "Assign each training pair to one pattern");
        sub->add_option("--pairs", pairs, "Training pairs TSV")->required();
        sub->add_option("--library", library, "Pattern library JSON")->required();
        sub->add_option("--out", out, "Labels TSV to write")->required();
        sub->add_option("--threads", threads, "Concurrent labeling calls (default: gateway cap)");
        gateway.add(*sub);
        sub->final_callback([this, &action] { action = [this] { return run(); }; });
    }
    int run() const {
        const auto all = ingest_pairs(pairs);
        const auto lib = read_library(library);
        lib.validate();
        const auto gw_cfg = gateway.resolve();
        auto gw = make_gateway(gw_cfg);
        const auto labels = label_pairs(all, lib, *gw, threads.value_or(gw->max_in_flight()));
        const auto hash =
            hash_of({{"pairs", pairs}, {"library", lib.version}, {"model", gw_cfg.model}});
        write_labels_tsv(labels, out, hash);
        std::vector<std::size_t> counts(lib.size(), 0);
        for (const auto& l : labels) counts[static_cast<std::size_t>(l.pattern_id)]++;
        for (std::size_t i = 0; i < lib.size(); ++i) fmt::print(stderr, "{:>6}  {}\n", counts[i], lib.patterns[i].name);
        fmt::print(stderr, "{} labels -> {}\n", labels.size(), out);
        return 0;
    }
};

// -------------------------------------------------------- train-selector

struct TrainCmd {
    std::string pairs, labels, library, corpus, out;
    std::optional<std::string> loss_csv;
    std::size_t k_context = kDefaultContextDepth;
    std::size_t snippet_tokens = 64;
    SelectorHyper hyper;
    FeatureConfig features;
    Bm25Params bm25;
    void add(CLI::App& app, std::function<int()>& action) {
        auto* sub = app.add_subcommand("train-selector", "Train the linear pattern selector");
        sub->add_option("--pairs", pairs, "Training pairs TSV")->required();
        sub->add_option("--labels", labels, "Labels TSV from `qrp label`")->required();
        sub->add_option("--library", library, "Pattern library JSON")->required();
        sub->add_option("--corpus", corpus, "Corpus TSV or index used for training contexts")->required();
        sub->add_option("--out", out, "Model file to write")->required();
        sub->add_option("--loss-csv", loss_csv, "Loss curve (default <out>.loss.csv)");
        sub->add_option("--k-context", k_context, "Context documents per query")->capture_default_str();
        sub->add_option("--snippet-tokens", snippet_tokens, "Tokens per context snippet")->capture_default_str();
        sub->add_option("--epochs", hyper.epochs, "Training epochs")->capture_default_str();
        sub->add_option("--batch-size", hyper.batch_size, "Mini-batch size")->capture_default_str();
        sub->add_option("--eta0", hyper.eta0, "Initial learning rate")->capture_default_str();
        sub->add_option("--decay", hyper.decay, "Learning-rate decay per update")->capture_default_str();
        sub->add_option("--lambda", hyper.lambda, "L2 penalty")->capture_default_str();
        sub->add_option("--seed", hyper.seed, "Shuffling seed")->capture_default_str();
        sub->add_option("--dim", features.dim, "Hashed feature dimension")->capture_default_str();
        sub->add_option("--max-ngram", features.max_ngram, "Longest word n-gram")->capture_default_str();
        sub->add_option("--hash-seed", features.hash_seed, "Feature hash seed")->capture_default_str();
        sub->final_callback([this, &action] { action = [this] { return run(); }; });
    }
    int run() {
        if (features.dim == 0) throw ConfigError("--dim must be >= 1");
        features.snippet_cap = snippet_tokens;
        const auto all = ingest_pairs(pairs);
        const auto lib = read_library(library);
        lib.validate();
        const auto label_list = read_labels_tsv(labels);
        std::map<std::string, int> by_pair;
        for (const auto& l : label_list) {
            if (l.pattern_id < 0 || static_cast<std::size_t>(l.pattern_id) >= lib.size()) {
                throw DataError(fmt::format("label for pair {} is {}, outside [0, {})", l.pair_id, l.pattern_id,
                                            lib.size()));
            }
            by_pair[l.pair_id] = l.pattern_id;
        }
        const auto index = open_corpus(corpus);
        std::vector<SelectorExample> examples;
        for (const auto& p : all) {
            const auto it = by_pair.find(p.pair_id);
            if (it == by_pair.end()) continue;
            RetrievalContext ctx{p.pair_id, 0, {}};
            if (k_context > 0) ctx = retrieve_topk(index, p.query, RetrievalOptions{k_context, snippet_tokens, bm25}, p.pair_id);
            examples.push_back({p.pair_id, p.query, std::move(ctx), it->second});
            by_pair.erase(it);
        }
        if (!by_pair.empty()) {
            throw DataError(fmt::format("{} labels name pairs that are not in {} (first: {})", by_pair.size(), pairs,
                                        by_pair.begin()->first));
        }
        auto trained = train_selector(examples, lib, hyper, features);
        trained.model.config_hash = hash_of({{"pairs", pairs},
                                             {"labels", labels},
                                             {"library", lib.version},
                                             {"corpus", corpus},
                                             {"k_context", k_context},
                                             {"features", to_json(features)},
                                             {"epochs", hyper.epochs},
                                             {"batch_size", hyper.batch_size},
                                             {"eta0", hyper.eta0},
                                             {"decay", hyper.decay},
                                             {"lambda", hyper.lambda},
                                             {"seed", hyper.seed}});
        trained.model.save(out);
        write_loss_csv(trained.epoch_loss, loss_csv.value_or(out + ".loss.csv"));
        fmt::print(stderr, "{} examples, final loss {:.4f} -> {}\n", examples.size(),
                   trained.epoch_loss.empty() ? 0.0 : trained.epoch_loss.back(), out);
        return 0;
    }
};

// ----------------------------------------------------------- reformulate

struct ReformulateCmd {
    PipelineFlags flags;
    void add(CLI::App& app, std::function<int()>& action) {
        auto* sub = app.add_subcommand("reformulate", "Write reformulations and hybrid queries without evaluating");
        flags.add(*sub, true);
        sub->add_option("--mode", flags.mode, "reformer | reformer+hook (default reformer)");
        sub->final_callback([this, &action] { action = [this] { return run(); }; });
    }
    int run() {
        if (!flags.mode) flags.mode = "reformer";
        auto cfg = flags.resolve();
        if (!cfg.uses_llm()) throw ConfigError("reformulate needs mode reformer or reformer+hook");
        if (cfg.run_out.empty() && cfg.log_out.empty()) throw ConfigError("missing --out");
        const auto log_path = cfg.log_out.empty() ? cfg.run_out : cfg.log_out;
        cfg.qrels.clear();
        cfg.validate();
        const auto loaded = load_pipeline_inputs(cfg);
        const auto outputs = execute_pipeline(cfg, loaded.view());
        write_reformulation_log(outputs.log, log_path);
        std::size_t fallbacks = 0;
        for (const auto& r : outputs.log) fallbacks += r.fallback;
        fmt::print(stderr, "{} reformulations ({} fell back to the original query) -> {}\n", outputs.log.size(),
                   fallbacks, log_path.string());
        return 0;
    }
};

// -------------------------------------------------------------- evaluate

struct EvaluateCmd {
    std::string run_path, qrels;
    std::optional<std::string> csv;
    MetricsOptions options;
    void add(CLI::App& app, std::function<int()>& action) {
        auto* sub = app.add_subcommand("evaluate", "Score a TREC run against qrels");
        sub->add_option("--run", run_path, "TREC run file")->required();
        sub->add_option("--qrels", qrels, "TREC qrels")->required();
        sub->add_option("--csv", csv, "Also write per-query metrics as CSV");
        sub->add_option("--ndcg-depth", options.ndcg_depth, "nDCG cutoff")->capture_default_str();
        sub->add_option("--eval-depth", options.depth, "mAP / recall cutoff")->capture_default_str();
        sub->add_option("--binarize-at", options.binarize_at, "Relevance grade threshold")->capture_default_str();
        sub->final_callback([this, &action] { action = [this] { return run(); }; });
    }
    int run() const {
        const auto run_file = parse_run(std::filesystem::path(run_path));
        const auto report = evaluate_run(run_file, parse_qrels(std::filesystem::path(qrels)), options);
        write_report_table(report, std::cout);
        if (report.unjudged_queries > 0) {
            fmt::print(stderr, "{} run queries have no judgments and were ignored\n", report.unjudged_queries);
        }
        if (csv) write_report_csv(report, std::filesystem::path(*csv));
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pattern-guided query reformulation toolkit"};
    app.set_version_flag("--version", "qrp 0.1.0");
    app.require_subcommand(1);

    std::function<int()> action;
    IndexCmd index_cmd;
    index_cmd.add(app);
    RetrieveCmd retrieve_cmd;
    retrieve_cmd.add(app, action);
    PipelineCmd baseline_cmd;
    baseline_cmd.add(app, action, "baseline", "BM25 / RM3 / Rocchio baseline run", false);
    InduceCmd induce_cmd;
    induce_cmd.add(app, action);
    LabelCmd label_cmd;
    label_cmd.add(app, action);
    TrainCmd train_cmd;
    train_cmd.add(app, action);
    ReformulateCmd reformulate_cmd;
    reformulate_cmd.add(app, action);
    PipelineCmd run_cmd;
    run_cmd.add(app, action, "run", "Full experiment: retrieve, select, generate, re-rank, evaluate", true);
    EvaluateCmd evaluate_cmd;
    evaluate_cmd.add(app, action);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (!action && index_cmd.action) action = index_cmd.action;
    try {
        return action ? action() : 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        if (const auto* t = dynamic_cast<const TransportError*>(&e)) {
            for (const auto& a : t->attempts()) fmt::print(stderr, "  {}\n", a);
        }
        return exit_code_for(e);
    }
}
