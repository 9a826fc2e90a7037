#include "qrp/pipeline.hpp"

#include <fstream>
#include <memory>

#include <fmt/format.h>

#include "qrp/hash.hpp"
#include "qrp/parallel.hpp"

namespace qrp {

using nlohmann::json;

std::string_view to_string(PipelineMode mode) noexcept {
    switch (mode) {
        case PipelineMode::bm25: return "bm25";
        case PipelineMode::rm3: return "rm3";
        case PipelineMode::rocchio: return "rocchio";
        case PipelineMode::reformer: return "reformer";
        case PipelineMode::reformer_hook: return "reformer+hook";
    }
    return "bm25";
}

PipelineMode parse_mode(std::string_view text) {
    for (auto m : {PipelineMode::bm25, PipelineMode::rm3, PipelineMode::rocchio, PipelineMode::reformer,
                   PipelineMode::reformer_hook}) {
        if (text == to_string(m)) return m;
    }
    throw ConfigError(fmt::format("unknown mode '{}' (expected bm25, rm3, rocchio, reformer, reformer+hook)", text));
}

namespace {

std::string_view to_string(SelectorKind kind) { return kind == SelectorKind::llm ? "llm" : "linear"; }
std::string_view to_string(SelectionMode mode) { return mode == SelectionMode::sample ? "sample" : "argmax"; }

SelectorKind parse_selector(std::string_view text) {
    if (text == "linear") return SelectorKind::linear;
    if (text == "llm") return SelectorKind::llm;
    throw ConfigError(fmt::format("unknown selector '{}' (expected linear or llm)", text));
}

SelectionMode parse_selection(std::string_view text) {
    if (text == "argmax") return SelectionMode::argmax;
    if (text == "sample") return SelectionMode::sample;
    throw ConfigError(fmt::format("unknown selection mode '{}' (expected argmax or sample)", text));
}

template <typename T>
void take(const json& body, const char* key, T& field) {
    if (body.contains(key) && !body[key].is_null()) field = body[key].get<T>();
}

void take_path(const json& body, const char* key, std::filesystem::path& field) {
    if (body.contains(key) && !body[key].is_null()) field = body[key].get<std::string>();
}

}  // namespace

json PipelineConfig::to_json() const {
    return {
        {"corpus", corpus.string()},
        {"queries", queries.string()},
        {"qrels", qrels.string()},
        {"library", library.string()},
        {"selector_model", selector_model.string()},
        {"hook_passages", hook_passages.string()},
        {"gateway",
         {{"mock_script", gateway.mock_script ? json(gateway.mock_script->string()) : json(nullptr)},
          {"endpoint", gateway.endpoint},
          {"model", gateway.model},
          {"max_in_flight", gateway.max_in_flight},
          {"max_retries", gateway.max_retries}}},
        {"mode", qrp::to_string(mode)},
        {"selector", to_string(selector)},
        {"selection", to_string(selection)},
        {"k_context", k_context},
        {"k_eval", k_eval},
        {"snippet_tokens", snippet_tokens},
        {"repetition", repetition},
        {"seed", seed},
        {"threads", threads},
        {"bm25", {{"k1", bm25.k1}, {"b", bm25.b}}},
        {"rm3", {{"fb_docs", rm3.fb_docs}, {"fb_terms", rm3.fb_terms}, {"orig_weight", rm3.orig_weight}}},
        {"rocchio",
         {{"fb_docs", rocchio.fb_docs},
          {"fb_terms", rocchio.fb_terms},
          {"alpha", rocchio.alpha},
          {"beta", rocchio.beta}}},
        {"metrics",
         {{"ndcg_depth", metrics.ndcg_depth}, {"depth", metrics.depth}, {"binarize_at", metrics.binarize_at}}},
    };
}

void PipelineConfig::merge_json(const json& body) {
    try {
        take_path(body, "corpus", corpus);
        take_path(body, "queries", queries);
        take_path(body, "qrels", qrels);
        take_path(body, "library", library);
        take_path(body, "selector_model", selector_model);
        take_path(body, "hook_passages", hook_passages);
        take_path(body, "run_out", run_out);
        take_path(body, "log_out", log_out);
        take_path(body, "report_out", report_out);
        if (body.contains("gateway")) {
            const auto& g = body["gateway"];
            if (g.contains("mock_script") && !g["mock_script"].is_null()) {
                gateway.mock_script = g["mock_script"].get<std::string>();
            }
            take(g, "endpoint", gateway.endpoint);
            take(g, "api_key", gateway.api_key);
            take(g, "model", gateway.model);
            take(g, "max_in_flight", gateway.max_in_flight);
            take(g, "max_retries", gateway.max_retries);
        }
        if (body.contains("mode")) mode = parse_mode(body["mode"].get<std::string>());
        if (body.contains("selector")) selector = parse_selector(body["selector"].get<std::string>());
        if (body.contains("selection")) selection = parse_selection(body["selection"].get<std::string>());
        take(body, "k_context", k_context);
        take(body, "k_eval", k_eval);
        take(body, "snippet_tokens", snippet_tokens);
        take(body, "repetition", repetition);
        take(body, "seed", seed);
        take(body, "threads", threads);
        if (body.contains("bm25")) {
            take(body["bm25"], "k1", bm25.k1);
            take(body["bm25"], "b", bm25.b);
        }
        if (body.contains("rm3")) {
            take(body["rm3"], "fb_docs", rm3.fb_docs);
            take(body["rm3"], "fb_terms", rm3.fb_terms);
            take(body["rm3"], "orig_weight", rm3.orig_weight);
        }
        if (body.contains("rocchio")) {
            take(body["rocchio"], "fb_docs", rocchio.fb_docs);
            take(body["rocchio"], "fb_terms", rocchio.fb_terms);
            take(body["rocchio"], "alpha", rocchio.alpha);
            take(body["rocchio"], "beta", rocchio.beta);
        }
        if (body.contains("metrics")) {
            take(body["metrics"], "ndcg_depth", metrics.ndcg_depth);
            take(body["metrics"], "depth", metrics.depth);
            take(body["metrics"], "binarize_at", metrics.binarize_at);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
}

std::string PipelineConfig::hash() const {
    auto body = to_json();
    // Settings that cannot change any output.
    body.erase("threads");
    body["gateway"].erase("max_in_flight");
    body["gateway"].erase("max_retries");
    return to_hex(stable_hash64(body.dump()));
}

void PipelineConfig::validate() const {
    const auto require = [](const std::filesystem::path& p, const char* what) {
        if (p.empty()) throw ConfigError(fmt::format("missing required {} path", what));
        if (!std::filesystem::exists(p)) throw ConfigError(fmt::format("{} not found: {}", what, p.string()));
    };
    require(corpus, "corpus");
    require(queries, "queries");
    if (!qrels.empty()) require(qrels, "qrels");
    if (k_eval == 0) throw ConfigError("k_eval must be >= 1");
    if (repetition < 1 || repetition > kMaxRepetition) {
        throw ConfigError(fmt::format("repetition must be between 1 and {}", kMaxRepetition));
    }
    if (uses_llm()) {
        require(library, "library");
        if (selector == SelectorKind::linear) require(selector_model, "selector model");
        if (gateway.mock_script) require(*gateway.mock_script, "mock script");
    }
    if (mode == PipelineMode::reformer_hook) require(hook_passages, "hook passages");
}

StageError::StageError(std::string stage, std::string query_id, const std::exception& cause)
    : Error(query_id.empty() ? fmt::format("stage '{}' failed: {}", stage, cause.what())
                             : fmt::format("stage '{}' failed for query {}: {}", stage, query_id, cause.what())),
      stage_(std::move(stage)),
      query_id_(std::move(query_id)),
      exit_code_(exit_code_for(cause)) {}

int exit_code_for(const std::exception& e) noexcept {
    if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code();
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const std::invalid_argument*>(&e)) return 2;
    if (dynamic_cast<const GatewayError*>(&e)) return 4;
    if (dynamic_cast<const DataError*>(&e)) return 3;
    return 1;
}

namespace {

template <typename Fn>
auto in_stage(const char* stage, const std::string& query_id, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, query_id, e);
    }
}

}  // namespace

PipelineOutputs execute_pipeline(const PipelineConfig& config, const PipelineInputs& inputs) {
    if (inputs.index == nullptr) throw ConfigError("pipeline needs an index");
    const auto& index = *inputs.index;
    if (config.uses_llm() && (inputs.library == nullptr || inputs.selector == nullptr || inputs.gateway == nullptr)) {
        throw ConfigError(fmt::format("mode {} needs a pattern library, a selector and an LLM gateway",
                                      qrp::to_string(config.mode)));
    }
    if (config.mode == PipelineMode::reformer_hook && inputs.hook_passages == nullptr) {
        throw ConfigError("mode reformer+hook needs hook passages");
    }

    PipelineOutputs out;
    out.config_hash = config.hash();
    out.run_tag = fmt::format("{}-{}", qrp::to_string(config.mode), out.config_hash.substr(0, 8));

    const auto& queries = inputs.queries;
    std::vector<RetrievalContext> results(queries.size());
    std::vector<ReformulationRecord> records(config.uses_llm() ? queries.size() : 0);
    const RetrievalOptions eval_options{config.k_eval, 0, config.bm25};
    std::size_t threads = config.threads;
    if (threads == 0) threads = config.uses_llm() ? inputs.gateway->max_in_flight() : 1;

    parallel_for(queries.size(), threads, [&](std::size_t i) {
        const auto& q = queries[i];
        if (!config.uses_llm()) {
            const auto weights = in_stage("expand", q.query_id, [&] {
                switch (config.mode) {
                    case PipelineMode::rm3: return rm3_expand(index, q.text, config.rm3, config.bm25).terms;
                    case PipelineMode::rocchio: return rocchio_expand(index, q.text, config.rocchio, config.bm25).terms;
                    default: return query_term_weights(q.text);
                }
            });
            results[i] = in_stage("retrieve", q.query_id,
                                  [&] { return retrieve_topk(index, weights, eval_options, q.query_id); });
            return;
        }

        const auto context = in_stage("context", q.query_id, [&] {
            if (config.k_context == 0) return RetrievalContext{q.query_id, 0, {}};
            return retrieve_topk(index, q.text, RetrievalOptions{config.k_context, config.snippet_tokens, config.bm25},
                                 q.query_id);
        });
        const int pattern_id = in_stage("select", q.query_id, [&] {
            const auto dist = inputs.selector->distribution(q.text, context);
            if (dist.probs.size() != inputs.library->size()) {
                throw DataError(fmt::format("selector returned {} probabilities for {} patterns", dist.probs.size(),
                                            inputs.library->size()));
            }
            return select_pattern(dist, config.selection, stable_hash64(q.query_id, config.seed));
        });
        const auto& pattern = inputs.library->patterns.at(static_cast<std::size_t>(pattern_id));
        std::string extra;
        if (config.mode == PipelineMode::reformer_hook) {
            const auto it = inputs.hook_passages->find(q.query_id);
            if (it == inputs.hook_passages->end()) {
                throw StageError("hook", q.query_id, DataError("no augmentation passage for this query"));
            }
            extra = it->second;
        }
        const auto reformulation = in_stage("generate", q.query_id, [&] {
            return generate_reformulation(*inputs.gateway, q.query_id, q.text, context, pattern, extra);
        });
        const auto hybrid = in_stage("compose", q.query_id,
                                     [&] { return compose_hybrid(q.text, reformulation.text, config.repetition); });
        results[i] = in_stage("retrieve", q.query_id,
                              [&] { return retrieve_topk(index, hybrid.text, eval_options, q.query_id); });
        records[i] = ReformulationRecord{q.query_id, pattern_id, pattern.name, reformulation.text, hybrid.text,
                                         reformulation.fallback, out.config_hash};
    });

    for (const auto& r : results) append_to_run(out.run, r, out.run_tag);
    out.log = std::move(records);
    return out;
}

namespace {

// Output files are written under a temporary name and renamed only after
// every file has been produced.
class StagedOutputs {
public:
    std::filesystem::path stage(const std::filesystem::path& final_path) {
        auto tmp = final_path;
        tmp += ".partial";
        staged_.emplace_back(tmp, final_path);
        return tmp;
    }
    void commit() {
        for (const auto& [tmp, final_path] : staged_) std::filesystem::rename(tmp, final_path);
        staged_.clear();
    }
    ~StagedOutputs() {
        std::error_code ec;
        for (const auto& [tmp, _] : staged_) std::filesystem::remove(tmp, ec);
    }

private:
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> staged_;
};

}  // namespace

LoadedInputs load_pipeline_inputs(const PipelineConfig& config, Gateway* gateway) {
    LoadedInputs in;
    in.index = in_stage("load-corpus", "", [&] { return open_corpus(config.corpus); });
    in.queries = in_stage("load-queries", "", [&] { return read_queries_tsv(config.queries); });
    if (!config.uses_llm()) return in;

    in.library = in_stage("load-library", "", [&] { return read_library(config.library); });
    if (gateway == nullptr) {
        in.owned_gateway = make_gateway(config.gateway);
        gateway = in.owned_gateway.get();
    }
    in.gateway = gateway;
    if (config.selector == SelectorKind::linear) {
        auto model = in_stage("load-selector", "", [&] { return SelectorModel::load(config.selector_model); });
        in_stage("load-selector", "", [&] { model.check_compatible(*in.library); });
        in.selector = std::make_unique<LinearSelector>(std::move(model));
    } else {
        in.selector = std::make_unique<LlmSelector>(*in.library, *gateway);
    }
    if (config.mode == PipelineMode::reformer_hook) {
        for (auto& q : in_stage("load-hook", "", [&] { return read_queries_tsv(config.hook_passages); })) {
            in.hook_passages.emplace(std::move(q.query_id), std::move(q.text));
        }
    }
    return in;
}

PipelineInputs LoadedInputs::view() const {
    PipelineInputs v;
    v.index = &index;
    v.queries = queries;
    v.library = library ? &*library : nullptr;
    v.selector = selector.get();
    v.gateway = gateway;
    v.hook_passages = &hook_passages;
    return v;
}

PipelineResult run_pipeline(const PipelineConfig& config, Gateway* gateway) {
    config.validate();
    if (config.run_out.empty()) throw ConfigError("missing run output path");
    const auto loaded = load_pipeline_inputs(config, gateway);

    PipelineResult result;
    result.outputs = execute_pipeline(config, loaded.view());
    if (!config.qrels.empty()) {
        const auto qrels = in_stage("load-qrels", "", [&] { return parse_qrels(config.qrels); });
        result.report = in_stage("evaluate", "", [&] {
            return evaluate_run(result.outputs.run, qrels, config.metrics);
        });
        result.report->config_hash = result.outputs.config_hash;
    }

    StagedOutputs staged;
    result.run_path = config.run_out;
    in_stage("write", "", [&] { write_run(result.outputs.run, staged.stage(result.run_path)); });
    if (config.uses_llm()) {
        result.log_path = config.log_out.empty() ? std::filesystem::path(config.run_out.string() + ".reformulations.jsonl")
                                                 : config.log_out;
        in_stage("write", "", [&] { write_reformulation_log(result.outputs.log, staged.stage(result.log_path)); });
    }
    if (result.report) {
        result.report_path = config.report_out.empty() ? std::filesystem::path(config.run_out.string() + ".metrics.csv")
                                                       : config.report_out;
        in_stage("write", "", [&] { write_report_csv(*result.report, staged.stage(result.report_path)); });
    }
    staged.commit();
    return result;
}

}  // namespace qrp
