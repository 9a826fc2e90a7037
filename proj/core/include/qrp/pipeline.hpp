#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qrp/error.hpp"
#include "qrp/feedback.hpp"
#include "qrp/gateway.hpp"
#include "qrp/generator.hpp"
#include "qrp/metrics.hpp"
#include "qrp/selector.hpp"
#include "qrp/trec.hpp"

namespace qrp {

enum class PipelineMode { bm25, rm3, rocchio, reformer, reformer_hook };

[[nodiscard]] std::string_view to_string(PipelineMode mode) noexcept;
/// Accepts bm25, rm3, rocchio, reformer, reformer+hook. Throws ConfigError.
[[nodiscard]] PipelineMode parse_mode(std::string_view text);

enum class SelectorKind { linear, llm };

struct PipelineConfig {
    std::filesystem::path corpus;   // TSV corpus or binary index
    std::filesystem::path queries;  // TSV
    std::filesystem::path qrels;    // optional
    std::filesystem::path library;
    std::filesystem::path selector_model;
    std::filesystem::path hook_passages;  // TSV query_id<TAB>passage, reformer+hook only
    GatewayConfig gateway;

    PipelineMode mode = PipelineMode::bm25;
    SelectorKind selector = SelectorKind::linear;
    SelectionMode selection = SelectionMode::argmax;
    std::size_t k_context = kDefaultContextDepth;
    std::size_t k_eval = kDefaultRunDepth;
    std::size_t snippet_tokens = 64;
    std::size_t repetition = 1;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0: gateway cap for LLM modes, 1 otherwise

    Bm25Params bm25;
    Rm3Params rm3;
    RocchioParams rocchio;
    MetricsOptions metrics;

    std::filesystem::path run_out;
    std::filesystem::path log_out;     // default: <run_out>.reformulations.jsonl
    std::filesystem::path report_out;  // default: <run_out>.metrics.csv

    /// Every field except the output paths.
    [[nodiscard]] nlohmann::json to_json() const;
    /// Overwrites only the fields present in `body` (config-file layering).
    void merge_json(const nlohmann::json& body);
    /// 16 hex characters over to_json().
    [[nodiscard]] std::string hash() const;
    /// Throws ConfigError when a required input is missing for the mode.
    void validate() const;
    [[nodiscard]] bool uses_llm() const noexcept {
        return mode == PipelineMode::reformer || mode == PipelineMode::reformer_hook;
    }
};

/// A pipeline failure with the stage and query it happened in. Keeps the
/// exit code of the underlying error.
class StageError : public Error {
public:
    StageError(std::string stage, std::string query_id, const std::exception& cause);
    [[nodiscard]] const std::string& stage() const noexcept { return stage_; }
    [[nodiscard]] const std::string& query_id() const noexcept { return query_id_; }
    [[nodiscard]] int exit_code() const noexcept { return exit_code_; }

private:
    std::string stage_;
    std::string query_id_;
    int exit_code_;
};

/// 2 config, 3 data, 4 gateway, 1 anything else.
[[nodiscard]] int exit_code_for(const std::exception& e) noexcept;

/// Already-loaded inputs for execute_pipeline.
struct PipelineInputs {
    const InvertedIndex* index = nullptr;
    std::span<const Query> queries;
    const PatternLibrary* library = nullptr;   // LLM modes
    PatternSelector* selector = nullptr;       // LLM modes
    Gateway* gateway = nullptr;                // LLM modes
    const std::map<std::string, std::string>* hook_passages = nullptr;
};

/// Owns everything a config names; `view()` borrows it for execute_pipeline.
struct LoadedInputs {
    InvertedIndex index;
    std::vector<Query> queries;
    std::optional<PatternLibrary> library;
    std::unique_ptr<Gateway> owned_gateway;
    Gateway* gateway = nullptr;
    std::unique_ptr<PatternSelector> selector;
    std::map<std::string, std::string> hook_passages;

    [[nodiscard]] PipelineInputs view() const;
};

/// Reads the corpus and queries, plus the library, selector, gateway and
/// hook passages for LLM modes. `gateway` overrides config.gateway.
[[nodiscard]] LoadedInputs load_pipeline_inputs(const PipelineConfig& config, Gateway* gateway = nullptr);

struct PipelineOutputs {
    Run run;
    std::vector<ReformulationRecord> log;  // LLM modes only, in query order
    std::string config_hash;
    std::string run_tag;
};

/// retrieve D_k(q) → select p → generate r → q* = q ⊕ r → retrieve, or a
/// single baseline retrieval for bm25/rm3/rocchio. No file IO.
[[nodiscard]] PipelineOutputs execute_pipeline(const PipelineConfig& config, const PipelineInputs& inputs);

struct PipelineResult {
    PipelineOutputs outputs;
    std::optional<MetricsReport> report;
    std::filesystem::path run_path;
    std::filesystem::path log_path;
    std::filesystem::path report_path;
};

/// Loads every input named by the config, runs the pipeline and writes the
/// run, the reformulation log (LLM modes) and the metrics CSV (when qrels
/// are given). Nothing is left on disk if any stage fails. `gateway`
/// overrides the one described by config.gateway.
PipelineResult run_pipeline(const PipelineConfig& config, Gateway* gateway = nullptr);

}  // namespace qrp
